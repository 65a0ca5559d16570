/* Copyright 2026 The charnmt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CHARNMT_COMMON_CONFIG_ENTRIES_H_
#define CHARNMT_COMMON_CONFIG_ENTRIES_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <string>

namespace charnmt {

using Entries = std::map<std::string, std::string>;

// Shortest text that parses back to exactly `v`.
std::string FormatReal(double v);

std::size_t ReadSize(const Entries& e, const std::string& key, std::size_t fallback);
std::uint64_t ReadU64(const Entries& e, const std::string& key, std::uint64_t fallback);
double ReadReal(const Entries& e, const std::string& key, double fallback);
bool ReadBool(const Entries& e, const std::string& key, bool fallback);
std::string ReadString(const Entries& e, const std::string& key, const std::string& fallback);

// "key=value" lines; blank lines and lines starting with '#' are skipped.
// Whitespace around keys and values is trimmed. Duplicate keys throw.
Entries ParseEntries(std::istream& in, const std::string& origin);

// Throws DataError naming the first key not in `known`.
void RejectUnknownKeys(const Entries& e, const std::set<std::string>& known, const std::string& origin);

}  // namespace charnmt

#endif  // CHARNMT_COMMON_CONFIG_ENTRIES_H_

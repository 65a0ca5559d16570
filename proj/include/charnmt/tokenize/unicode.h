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

#ifndef CHARNMT_TOKENIZE_UNICODE_H_
#define CHARNMT_TOKENIZE_UNICODE_H_

#include <string>
#include <string_view>
#include <vector>

namespace charnmt::tokenize {

// Throws DataError naming the byte offset of the first malformed sequence.
void ValidateUtf8(std::string_view text);

std::string NormalizeNfc(std::string_view text);

// One UTF-8 string per Unicode scalar value.
std::vector<std::string> SplitCodePoints(std::string_view text);

std::size_t CountCodePoints(std::string_view text);

// Unicode White_Space property.
bool IsWhitespace(char32_t cp);
bool IsWhitespace(std::string_view single_code_point);

}  // namespace charnmt::tokenize

#endif  // CHARNMT_TOKENIZE_UNICODE_H_

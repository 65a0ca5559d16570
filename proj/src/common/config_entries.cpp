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

#include "charnmt/common/config_entries.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string_view>

#include "charnmt/common/error.h"

namespace charnmt {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename U>
U ParseInteger(const std::string& key, const std::string& text) {
  U value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw DataError("bad integer for '" + key + "': '" + text + "'");
  }
  return value;
}

}  // namespace

std::string FormatReal(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::size_t ReadSize(const Entries& e, const std::string& key, std::size_t fallback) {
  auto it = e.find(key);
  return it == e.end() ? fallback : ParseInteger<std::size_t>(key, it->second);
}

std::uint64_t ReadU64(const Entries& e, const std::string& key, std::uint64_t fallback) {
  auto it = e.find(key);
  return it == e.end() ? fallback : ParseInteger<std::uint64_t>(key, it->second);
}

double ReadReal(const Entries& e, const std::string& key, double fallback) {
  auto it = e.find(key);
  if (it == e.end()) return fallback;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (it->second.empty() || end != it->second.c_str() + it->second.size() || !std::isfinite(v)) {
    throw DataError("bad number for '" + key + "': '" + it->second + "'");
  }
  return v;
}

bool ReadBool(const Entries& e, const std::string& key, bool fallback) {
  auto it = e.find(key);
  if (it == e.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw DataError("bad boolean for '" + key + "': '" + it->second + "'");
}

std::string ReadString(const Entries& e, const std::string& key, const std::string& fallback) {
  auto it = e.find(key);
  return it == e.end() ? fallback : it->second;
}

Entries ParseEntries(std::istream& in, const std::string& origin) {
  Entries out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = Trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key(Trim(view.substr(0, eq)));
    std::string value(Trim(view.substr(eq + 1)));
    if (key.empty()) throw DataError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw DataError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

void RejectUnknownKeys(const Entries& e, const std::set<std::string>& known, const std::string& origin) {
  for (const auto& [key, value] : e) {
    if (!known.contains(key)) throw DataError(origin + ": unknown key '" + key + "'");
  }
}

}  // namespace charnmt

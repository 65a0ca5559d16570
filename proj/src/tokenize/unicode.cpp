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

#include "charnmt/tokenize/unicode.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "charnmt/common/error.h"

namespace charnmt::tokenize {
namespace {

// Calls fn(begin, end, code point) for every scalar value.
template <typename Fn>
void ForEachCodePoint(std::string_view text, Fn fn) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 cp;
    U8_NEXT(bytes, i, length, cp);
    if (cp < 0) throw DataError("invalid UTF-8 at byte " + std::to_string(start));
    fn(static_cast<std::size_t>(start), static_cast<std::size_t>(i), static_cast<char32_t>(cp));
  }
}

}  // namespace

void ValidateUtf8(std::string_view text) {
  ForEachCodePoint(text, [](std::size_t, std::size_t, char32_t) {});
}

std::string NormalizeNfc(std::string_view text) {
  ValidateUtf8(text);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  const icu::UnicodeString in =
      icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  if (nfc->isNormalized(in, status) && U_SUCCESS(status)) return std::string(text);
  status = U_ZERO_ERROR;
  const icu::UnicodeString out = nfc->normalize(in, status);
  if (U_FAILURE(status)) throw DataError("NFC normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::vector<std::string> SplitCodePoints(std::string_view text) {
  std::vector<std::string> units;
  ForEachCodePoint(text, [&](std::size_t b, std::size_t e, char32_t) { units.emplace_back(text.substr(b, e - b)); });
  return units;
}

std::size_t CountCodePoints(std::string_view text) {
  std::size_t n = 0;
  ForEachCodePoint(text, [&](std::size_t, std::size_t, char32_t) { ++n; });
  return n;
}

bool IsWhitespace(char32_t cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0; }

bool IsWhitespace(std::string_view single_code_point) {
  bool ws = false;
  std::size_t count = 0;
  ForEachCodePoint(single_code_point, [&](std::size_t, std::size_t, char32_t cp) {
    ws = IsWhitespace(cp);
    ++count;
  });
  return count == 1 && ws;
}

}  // namespace charnmt::tokenize

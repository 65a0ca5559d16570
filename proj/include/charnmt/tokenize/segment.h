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

#ifndef CHARNMT_TOKENIZE_SEGMENT_H_
#define CHARNMT_TOKENIZE_SEGMENT_H_

#include <string>
#include <string_view>
#include <vector>

namespace charnmt::tokenize {

// Translation-unit granularity.
//   kCharJa      one unit per code point, whitespace kept as explicit units
//   kMorphemeVi  one unit per whitespace-delimited syllable
//   kWord        whitespace words
//   kBpe         subwords of whitespace words, word ends carry the marker
enum class SegmentationMode { kCharJa, kMorphemeVi, kWord, kBpe };

enum class Language { kJapanese, kVietnamese };

std::string_view ModeName(SegmentationMode mode);
// Accepts "char-ja", "morpheme-vi", "word", "bpe"; throws ParameterError otherwise.
SegmentationMode ParseMode(std::string_view name);

struct TokenSequence {
  std::vector<std::string> units;
  SegmentationMode mode = SegmentationMode::kWord;

  bool operator==(const TokenSequence&) const = default;
};

// Canonical text a mode round-trips to: NFC, plus (for the whitespace
// modes) runs of whitespace collapsed to one ASCII space and trimmed.
std::string NormalizeText(std::string_view text, SegmentationMode mode);

TokenSequence CharSegment(std::string_view text, Language language);
TokenSequence WordSegment(std::string_view text);

// Joins units under the mode's rule ("" for kCharJa, " " for the
// whitespace modes; kBpe resolves end-of-word markers).
std::string JoinUnits(const TokenSequence& seq, std::string_view bpe_marker = "</w>");

}  // namespace charnmt::tokenize

#endif  // CHARNMT_TOKENIZE_SEGMENT_H_

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

#include "charnmt/tokenize/segment.h"

#include "charnmt/common/error.h"
#include "charnmt/tokenize/unicode.h"

namespace charnmt::tokenize {
namespace {

std::vector<std::string> SplitOnWhitespace(const std::string& normalized) {
  std::vector<std::string> words;
  std::string current;
  for (const auto& unit : SplitCodePoints(normalized)) {
    if (IsWhitespace(unit)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current += unit;
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

}  // namespace

std::string_view ModeName(SegmentationMode mode) {
  switch (mode) {
    case SegmentationMode::kCharJa:
      return "char-ja";
    case SegmentationMode::kMorphemeVi:
      return "morpheme-vi";
    case SegmentationMode::kWord:
      return "word";
    case SegmentationMode::kBpe:
      return "bpe";
  }
  return "unknown";
}

SegmentationMode ParseMode(std::string_view name) {
  for (auto mode : {SegmentationMode::kCharJa, SegmentationMode::kMorphemeVi, SegmentationMode::kWord,
                    SegmentationMode::kBpe}) {
    if (ModeName(mode) == name) return mode;
  }
  throw ParameterError("unknown segmentation mode '" + std::string(name) +
                       "' (expected char-ja, morpheme-vi, word or bpe)");
}

std::string NormalizeText(std::string_view text, SegmentationMode mode) {
  std::string nfc = NormalizeNfc(text);
  if (mode == SegmentationMode::kCharJa) return nfc;
  std::string joined;
  for (const auto& w : SplitOnWhitespace(nfc)) {
    if (!joined.empty()) joined += ' ';
    joined += w;
  }
  return joined;
}

TokenSequence CharSegment(std::string_view text, Language language) {
  const std::string nfc = NormalizeNfc(text);
  if (language == Language::kVietnamese) {
    return TokenSequence{SplitOnWhitespace(nfc), SegmentationMode::kMorphemeVi};
  }
  return TokenSequence{SplitCodePoints(nfc), SegmentationMode::kCharJa};
}

TokenSequence WordSegment(std::string_view text) {
  return TokenSequence{SplitOnWhitespace(NormalizeNfc(text)), SegmentationMode::kWord};
}

std::string JoinUnits(const TokenSequence& seq, std::string_view bpe_marker) {
  std::string out;
  switch (seq.mode) {
    case SegmentationMode::kCharJa:
      for (const auto& u : seq.units) out += u;
      return out;
    case SegmentationMode::kMorphemeVi:
    case SegmentationMode::kWord:
      for (std::size_t i = 0; i < seq.units.size(); ++i) {
        if (i > 0) out += ' ';
        out += seq.units[i];
      }
      return out;
    case SegmentationMode::kBpe: {
      bool word_open = false;
      for (const auto& u : seq.units) {
        std::string_view piece = u;
        const bool ends_word = !bpe_marker.empty() && piece.size() >= bpe_marker.size() &&
                               piece.substr(piece.size() - bpe_marker.size()) == bpe_marker;
        if (ends_word) piece.remove_suffix(bpe_marker.size());
        if (!word_open && !out.empty()) out += ' ';
        out += piece;
        word_open = !ends_word;
      }
      return out;
    }
  }
  return out;
}

}  // namespace charnmt::tokenize

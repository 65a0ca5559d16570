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

#ifndef CHARNMT_TOKENIZE_BPE_H_
#define CHARNMT_TOKENIZE_BPE_H_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "charnmt/tokenize/segment.h"

namespace charnmt::tokenize {

inline constexpr std::string_view kDefaultBpeMarker = "</w>";
inline constexpr std::size_t kDefaultBpeMerges = 8000;

using SymbolPair = std::pair<std::string, std::string>;

// Ordered merge rules. Earlier rules have priority when applying.
class BpeModel {
 public:
  explicit BpeModel(std::string marker = std::string(kDefaultBpeMarker), std::vector<SymbolPair> merges = {});

  const std::vector<SymbolPair>& merges() const { return merges_; }
  const std::string& marker() const { return marker_; }

  // Subwords of a single whitespace-free word; the last one carries the marker.
  std::vector<std::string> Apply(std::string_view word) const;
  TokenSequence Apply(const TokenSequence& words) const;

  // "bpe-v1 <marker>" header, then one "left right" merge per line.
  void Save(std::ostream& out) const;
  static BpeModel Load(std::istream& in);

 private:
  std::string marker_;
  std::vector<SymbolPair> merges_;
  std::map<SymbolPair, std::size_t> rank_;
};

// Greedy most-frequent-pair merging over the word-frequency dictionary of
// `corpus`; stops after `num_merges` rounds or when no pair occurs twice.
// Ties go to the lexicographically smallest pair.
BpeModel LearnBpe(const std::vector<TokenSequence>& corpus, std::size_t num_merges,
                  std::string marker = std::string(kDefaultBpeMarker));

}  // namespace charnmt::tokenize

#endif  // CHARNMT_TOKENIZE_BPE_H_

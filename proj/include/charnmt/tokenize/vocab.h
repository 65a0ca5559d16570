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

#ifndef CHARNMT_TOKENIZE_VOCAB_H_
#define CHARNMT_TOKENIZE_VOCAB_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "charnmt/common/types.h"
#include "charnmt/tokenize/bpe.h"
#include "charnmt/tokenize/segment.h"

namespace charnmt::tokenize {

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";

// Bijective token <-> id map; ids 0..3 are PAD, BOS, EOS, UNK.
class Vocabulary {
 public:
  Vocabulary();
  // `regular` become ids 4, 5, ... in order. Empty or duplicate tokens throw.
  explicit Vocabulary(const std::vector<std::string>& regular);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& Token(TokenId id) const;
  std::optional<TokenId> Find(std::string_view token) const;
  TokenId IdOrUnk(std::string_view token) const { return Find(token).value_or(kUnkId); }

  // One regular token per line; line i holds id i + 4.
  void Save(std::ostream& out) const;
  static Vocabulary Load(std::istream& in);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

// Frequency-ranked (ties lexicographic) vocabulary. `max_size` counts the four
// specials; tokens seen fewer than `min_freq` times are dropped.
Vocabulary BuildVocab(const std::vector<TokenSequence>& corpus, std::optional<std::size_t> max_size = std::nullopt,
                      std::optional<std::size_t> min_freq = std::nullopt);

IdSequence Encode(const Vocabulary& vocab, const TokenSequence& seq, bool add_bos_eos);

// Drops PAD/BOS/EOS, renders UNK as "<unk>", and joins under the mode's rule.
std::string Decode(const Vocabulary& vocab, std::span<const TokenId> ids, SegmentationMode mode,
                   std::string_view bpe_marker = kDefaultBpeMarker);

}  // namespace charnmt::tokenize

#endif  // CHARNMT_TOKENIZE_VOCAB_H_

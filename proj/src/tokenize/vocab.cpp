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

#include "charnmt/tokenize/vocab.h"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "charnmt/common/error.h"

namespace charnmt::tokenize {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& regular) {
  tokens_ = {std::string(kPadToken), std::string(kBosToken), std::string(kEosToken), std::string(kUnkToken)};
  for (TokenId id = 0; id < kNumSpecials; ++id) index_.emplace(tokens_[id], id);
  for (const auto& t : regular) {
    if (t.empty()) throw DataError("vocabulary tokens must be non-empty");
    if (!index_.emplace(t, static_cast<TokenId>(tokens_.size())).second) {
      throw DataError("duplicate vocabulary token '" + t + "'");
    }
    tokens_.push_back(t);
  }
}

const std::string& Vocabulary::Token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " out of range [0, " + std::to_string(tokens_.size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::Save(std::ostream& out) const {
  for (std::size_t i = kNumSpecials; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocabulary Vocabulary::Load(std::istream& in) {
  std::vector<std::string> regular;
  std::string line;
  while (std::getline(in, line)) regular.push_back(line);
  return Vocabulary(regular);
}

Vocabulary BuildVocab(const std::vector<TokenSequence>& corpus, std::optional<std::size_t> max_size,
                      std::optional<std::size_t> min_freq) {
  if (corpus.empty()) throw DataError("vocabulary construction needs a non-empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& seq : corpus) {
    for (const auto& u : seq.units) {
      if (u.empty() || u == kPadToken || u == kBosToken || u == kEosToken || u == kUnkToken) continue;
      ++freq[u];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> regular;
  const std::size_t room = max_size ? (*max_size > kNumSpecials ? *max_size - kNumSpecials : 0) : ranked.size();
  for (const auto& [token, count] : ranked) {
    if (regular.size() >= room) break;
    if (min_freq && count < *min_freq) continue;
    regular.push_back(token);
  }
  return Vocabulary(regular);
}

IdSequence Encode(const Vocabulary& vocab, const TokenSequence& seq, bool add_bos_eos) {
  IdSequence ids;
  ids.reserve(seq.units.size() + 2);
  if (add_bos_eos) ids.push_back(kBosId);
  for (const auto& u : seq.units) ids.push_back(vocab.IdOrUnk(u));
  if (add_bos_eos) ids.push_back(kEosId);
  return ids;
}

std::string Decode(const Vocabulary& vocab, std::span<const TokenId> ids, SegmentationMode mode,
                   std::string_view bpe_marker) {
  TokenSequence seq{{}, mode};
  for (TokenId id : ids) {
    const std::string& token = vocab.Token(id);
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    seq.units.push_back(token);
  }
  return JoinUnits(seq, bpe_marker);
}

}  // namespace charnmt::tokenize

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

#include "charnmt/tokenize/bpe.h"

#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "charnmt/common/error.h"
#include "charnmt/tokenize/unicode.h"

namespace charnmt::tokenize {
namespace {

std::vector<std::string> InitialSymbols(std::string_view word, const std::string& marker) {
  auto symbols = SplitCodePoints(word);
  if (!symbols.empty()) symbols.back() += marker;
  return symbols;
}

// Replaces every non-overlapping occurrence of `pair`, scanning left to right.
bool MergePair(std::vector<std::string>& symbols, const SymbolPair& pair) {
  bool changed = false;
  std::vector<std::string> out;
  out.reserve(symbols.size());
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i + 1 < symbols.size() && symbols[i] == pair.first && symbols[i + 1] == pair.second) {
      out.push_back(symbols[i] + symbols[i + 1]);
      ++i;
      changed = true;
    } else {
      out.push_back(std::move(symbols[i]));
    }
  }
  symbols = std::move(out);
  return changed;
}

class PairStatistics {
 public:
  void Adjust(const SymbolPair& pair, long long delta) {
    auto it = counts_.find(pair);
    long long before = it == counts_.end() ? 0 : it->second;
    if (before > 0) ranked_.erase({-before, pair});
    const long long after = before + delta;
    if (after > 0) {
      counts_[pair] = after;
      ranked_.insert({-after, pair});
    } else if (it != counts_.end()) {
      counts_.erase(it);
    }
  }

  // Highest count, then smallest pair.
  bool Best(SymbolPair& pair, long long& count) const {
    if (ranked_.empty()) return false;
    pair = ranked_.begin()->second;
    count = -ranked_.begin()->first;
    return true;
  }

 private:
  std::map<SymbolPair, long long> counts_;
  std::set<std::pair<long long, SymbolPair>> ranked_;
};

}  // namespace

BpeModel::BpeModel(std::string marker, std::vector<SymbolPair> merges)
    : marker_(std::move(marker)), merges_(std::move(merges)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) rank_.emplace(merges_[i], i);
}

std::vector<std::string> BpeModel::Apply(std::string_view word) const {
  auto symbols = InitialSymbols(word, marker_);
  while (symbols.size() > 1) {
    std::size_t best_rank = merges_.size();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      auto it = rank_.find({symbols[i], symbols[i + 1]});
      if (it != rank_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == merges_.size()) break;
    MergePair(symbols, merges_[best_rank]);
  }
  return symbols;
}

TokenSequence BpeModel::Apply(const TokenSequence& words) const {
  TokenSequence out{{}, SegmentationMode::kBpe};
  for (const auto& w : words.units) {
    for (auto& piece : Apply(w)) out.units.push_back(std::move(piece));
  }
  return out;
}

void BpeModel::Save(std::ostream& out) const {
  out << "bpe-v1 " << marker_ << '\n';
  for (const auto& [left, right] : merges_) out << left << ' ' << right << '\n';
}

BpeModel BpeModel::Load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("bpe-v1 ", 0) != 0) {
    throw DataError("BPE model: missing 'bpe-v1 <marker>' header");
  }
  std::string marker = header.substr(7);
  std::vector<SymbolPair> merges;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 >= line.size() ||
        line.find(' ', space + 1) != std::string::npos) {
      throw DataError("BPE model: malformed merge on line " + std::to_string(lineno));
    }
    merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return BpeModel(std::move(marker), std::move(merges));
}

BpeModel LearnBpe(const std::vector<TokenSequence>& corpus, std::size_t num_merges, std::string marker) {
  if (corpus.empty()) throw DataError("BPE learning needs a non-empty corpus");
  std::map<std::string, long long> freq;
  for (const auto& seq : corpus) {
    for (const auto& w : seq.units) ++freq[w];
  }
  std::vector<std::vector<std::string>> words;
  std::vector<long long> counts;
  for (const auto& [w, c] : freq) {
    words.push_back(InitialSymbols(w, marker));
    counts.push_back(c);
  }

  PairStatistics stats;
  std::map<SymbolPair, std::unordered_set<std::size_t>> where;
  auto account = [&](std::size_t wi, long long sign) {
    const auto& sym = words[wi];
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      SymbolPair p{sym[i], sym[i + 1]};
      stats.Adjust(p, sign * counts[wi]);
      if (sign > 0) where[p].insert(wi);
    }
  };
  for (std::size_t wi = 0; wi < words.size(); ++wi) account(wi, +1);

  std::vector<SymbolPair> merges;
  while (merges.size() < num_merges) {
    SymbolPair best;
    long long count = 0;
    if (!stats.Best(best, count) || count < 2) break;
    merges.push_back(best);
    auto it = where.find(best);
    std::vector<std::size_t> affected(it->second.begin(), it->second.end());
    where.erase(it);
    for (std::size_t wi : affected) {
      std::vector<std::string> copy = words[wi];
      if (!MergePair(copy, best)) continue;
      account(wi, -1);
      words[wi] = std::move(copy);
      account(wi, +1);
    }
  }
  return BpeModel(std::move(marker), std::move(merges));
}

}  // namespace charnmt::tokenize

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

#include "charnmt/evalmetrics/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "charnmt/common/error.h"
#include "charnmt/tokenize/unicode.h"

namespace charnmt::evalmetrics {
namespace {

void CheckCorpus(std::size_t hyps, std::size_t refs) {
  if (hyps != refs) {
    throw DataError("hypotheses and references differ in length: " + std::to_string(hyps) + " vs " +
                    std::to_string(refs));
  }
  if (hyps == 0) throw DataError("cannot score an empty corpus");
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts Count(const Tokens& t, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + i, t.begin() + i + n)];
  return out;
}

double BrevityPenalty(std::size_t hyp_len, std::size_t ref_len) {
  if (hyp_len == 0) return 0.0;
  if (hyp_len >= ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
}

// Start positions of `t[begin, end)` inside `seq`.
std::vector<std::size_t> Occurrences(const Tokens& seq, const Tokens& t, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> out;
  const std::size_t n = end - begin;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    if (std::equal(t.begin() + begin, t.begin() + end, seq.begin() + i)) out.push_back(i);
  }
  return out;
}

}  // namespace

BleuScore CorpusBleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references) {
  CheckCorpus(hypotheses.size(), references.size());
  BleuScore s;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const auto& h = hypotheses[k];
    const auto& r = references[k];
    s.hyp_len += h.size();
    s.ref_len += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto hc = Count(h, n);
      const auto rc = Count(r, n);
      for (const auto& [gram, c] : hc) {
        const auto it = rc.find(gram);
        if (it != rc.end()) s.matches[n - 1] += std::min(c, it->second);
      }
      if (h.size() >= n) s.totals[n - 1] += h.size() - n + 1;
    }
  }
  s.brevity_penalty = BrevityPenalty(s.hyp_len, s.ref_len);
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    s.precisions[n] =
        s.totals[n] == 0 ? 0.0 : static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    if (s.matches[n] == 0) {
      zero = true;
    } else {
      log_sum += std::log(s.precisions[n]);
    }
  }
  s.bleu = zero ? 0.0 : 100.0 * s.brevity_penalty * std::exp(log_sum / 4.0);
  return s;
}

Alignment RibesAlign(const Tokens& hyp, const Tokens& ref) {
  Alignment out;
  std::vector<bool> used(ref.size(), false);
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    const auto in_ref = Occurrences(ref, hyp, i, i + 1);
    if (in_ref.empty()) continue;
    std::optional<std::size_t> pos;
    if (in_ref.size() == 1 && Occurrences(hyp, hyp, i, i + 1).size() == 1) {
      pos = in_ref.front();
    } else {
      const std::size_t widest = std::max(i + 1, hyp.size() - i);
      for (std::size_t w = 1; w < widest && !pos; ++w) {
        if (w <= i) {
          const auto r = Occurrences(ref, hyp, i - w, i + 1);
          if (r.size() == 1 && Occurrences(hyp, hyp, i - w, i + 1).size() == 1) pos = r.front() + w;
        }
        if (!pos && i + w < hyp.size()) {
          const auto r = Occurrences(ref, hyp, i, i + w + 1);
          if (r.size() == 1 && Occurrences(hyp, hyp, i, i + w + 1).size() == 1) pos = r.front();
        }
      }
    }
    if (pos && !used[*pos]) {
      used[*pos] = true;
      out.emplace_back(i, *pos);
    }
  }
  return out;
}

SentenceRibes SentenceRibesScore(const Tokens& hyp, const Tokens& ref, const RibesParams& params) {
  SentenceRibes s;
  if (hyp.empty()) return s;
  const Alignment a = RibesAlign(hyp, ref);
  s.aligned = a.size();
  s.unigram_precision = static_cast<double>(a.size()) / static_cast<double>(hyp.size());
  s.brevity_penalty = BrevityPenalty(hyp.size(), ref.size());
  if (a.size() < 2) return s;
  std::size_t ascending = 0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    for (std::size_t y = x + 1; y < a.size(); ++y) ascending += a[x].second < a[y].second;
  }
  const std::size_t pairs = a.size() * (a.size() - 1) / 2;
  s.nkt = static_cast<double>(ascending) / static_cast<double>(pairs);
  s.score = s.nkt * std::pow(s.unigram_precision, params.alpha) * std::pow(s.brevity_penalty, params.beta);
  return s;
}

RibesScore CorpusRibes(std::span<const Tokens> hypotheses, std::span<const Tokens> references,
                       const RibesParams& params) {
  CheckCorpus(hypotheses.size(), references.size());
  RibesScore out;
  double total = 0.0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    out.sentences.push_back(SentenceRibesScore(hypotheses[k], references[k], params));
    total += out.sentences.back().score;
  }
  out.ribes = total / static_cast<double>(hypotheses.size());
  return out;
}

Tokens EvalUnits(std::string_view line, tokenize::SegmentationMode mode) {
  if (mode == tokenize::SegmentationMode::kCharJa) {
    Tokens out;
    for (auto& u : tokenize::CharSegment(line, tokenize::Language::kJapanese).units) {
      if (!tokenize::IsWhitespace(u)) out.push_back(std::move(u));
    }
    return out;
  }
  return tokenize::WordSegment(line).units;
}

}  // namespace charnmt::evalmetrics

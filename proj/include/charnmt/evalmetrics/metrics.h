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

#ifndef CHARNMT_EVALMETRICS_METRICS_H_
#define CHARNMT_EVALMETRICS_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "charnmt/tokenize/segment.h"

namespace charnmt::evalmetrics {

using Tokens = std::vector<std::string>;

struct BleuScore {
  double bleu = 0.0;  // 0..100
  std::array<double, 4> precisions{};
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

// Corpus BLEU, one reference per hypothesis, clipped counts pooled over the
// corpus, no smoothing: any zero precision gives 0.
BleuScore CorpusBleu(std::span<const Tokens> hypotheses, std::span<const Tokens> references);

// (hyp index, ref index) pairs in hypothesis order.
using Alignment = std::vector<std::pair<std::size_t, std::size_t>>;

// A word occurring once on both sides aligns directly. Otherwise the n-gram
// around it grows one word at a time, left extension tried before right at
// each size, until it occurs exactly once on both sides. A reference
// position is used at most once; words that never resolve stay unaligned.
Alignment RibesAlign(const Tokens& hypothesis, const Tokens& reference);

struct RibesParams {
  double alpha = 0.25;
  double beta = 0.10;
};

struct SentenceRibes {
  double score = 0.0;
  double nkt = 0.0;
  double unigram_precision = 0.0;
  double brevity_penalty = 0.0;
  std::size_t aligned = 0;
};

SentenceRibes SentenceRibesScore(const Tokens& hypothesis, const Tokens& reference, const RibesParams& params = {});

struct RibesScore {
  double ribes = 0.0;  // mean of sentence scores
  std::vector<SentenceRibes> sentences;
};

RibesScore CorpusRibes(std::span<const Tokens> hypotheses, std::span<const Tokens> references,
                       const RibesParams& params = {});

// Evaluation units of a line: code points without whitespace for kCharJa,
// whitespace-separated tokens otherwise.
Tokens EvalUnits(std::string_view line, tokenize::SegmentationMode mode);

}  // namespace charnmt::evalmetrics

#endif  // CHARNMT_EVALMETRICS_METRICS_H_

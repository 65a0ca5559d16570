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

#ifndef CHARNMT_DECODE_DECODE_H_
#define CHARNMT_DECODE_DECODE_H_

#include <cstddef>
#include <span>
#include <vector>

#include "charnmt/common/model.h"
#include "charnmt/common/types.h"

namespace charnmt::decode {

using Model = Seq2SeqModel<float>;

// ceil(factor * src_len), at least 1.
std::size_t MaxDecodeLength(std::size_t src_len, double factor);

struct Hypothesis {
  IdSequence ids;  // BOS first; ends with EOS when finished
  double logprob = 0.0;
  bool finished = false;
  double score = 0.0;  // length-normalized logprob

  // Generated tokens without BOS and EOS.
  IdSequence Output() const;
  // Number of generated tokens, EOS included.
  std::size_t length() const { return ids.empty() ? 0 : ids.size() - 1; }
};

// logprob / ((5 + length) / 6)^alpha
double NormalizedScore(double logprob, std::size_t length, double alpha);

struct GreedyResult {
  Hypothesis hypothesis;
  bool truncated = false;  // max_len reached before EOS
};

// Argmax per step from BOS until EOS or `max_len` generated tokens. Ties go
// to the lowest id. PAD and BOS are never chosen, here or in BeamSearch.
GreedyResult GreedyDecode(const Model& model, std::span<const TokenId> src, std::size_t max_len,
                          double alpha = 0.6);
GreedyResult GreedyDecode(DecoderSession& session, std::size_t max_len, double alpha = 0.6);

struct BeamConfig {
  std::size_t beam_size = 4;
  double max_len_factor = 3.0;
  double length_norm_alpha = 0.6;

  void Validate() const;
};

// Per-step record of the expansion, for tests: cumulative logprobs of the
// candidates kept and of those pruned.
struct BeamStep {
  std::vector<double> kept;
  std::vector<double> pruned;
  std::vector<Hypothesis> pruned_finished;  // EOS candidates that did not make the cut
};

// Each step expands every live hypothesis over the whole vocabulary and keeps
// the beam_size best candidates by cumulative logprob; kept candidates ending
// in EOS leave the beam as finished. Stops when nothing is live or after
// max_len steps (survivors are returned unfinished). Results are sorted by
// normalized score, best first.
std::vector<Hypothesis> BeamSearch(const Model& model, std::span<const TokenId> src, const BeamConfig& config,
                                   std::vector<BeamStep>* trace = nullptr);
std::vector<Hypothesis> BeamSearch(const DecoderSession& session, std::size_t max_len, const BeamConfig& config,
                                   std::vector<BeamStep>* trace = nullptr);

}  // namespace charnmt::decode

#endif  // CHARNMT_DECODE_DECODE_H_

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

#include "charnmt/decode/decode.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "charnmt/common/error.h"

namespace charnmt::decode {
namespace {

// PAD and BOS never appear in a target.
bool Selectable(std::size_t v) { return v != static_cast<std::size_t>(kPadId) && v != static_cast<std::size_t>(kBosId); }

}  // namespace

std::size_t MaxDecodeLength(std::size_t src_len, double factor) {
  const double n = std::ceil(factor * static_cast<double>(src_len));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

IdSequence Hypothesis::Output() const {
  IdSequence out;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (ids[i] == kEosId) break;
    out.push_back(ids[i]);
  }
  return out;
}

double NormalizedScore(double logprob, std::size_t length, double alpha) {
  return logprob / std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

GreedyResult GreedyDecode(DecoderSession& session, std::size_t max_len, double alpha) {
  GreedyResult r;
  r.hypothesis.ids = {kBosId};
  TokenId prev = kBosId;
  for (std::size_t step = 0; step < max_len; ++step) {
    const auto lp = session.Advance(prev);
    std::size_t best = lp.size();
    for (std::size_t v = 0; v < lp.size(); ++v) {
      if (Selectable(v) && (best == lp.size() || lp[v] > lp[best])) best = v;
    }
    if (best == lp.size()) throw DataError("target vocabulary has no selectable tokens");
    prev = static_cast<TokenId>(best);
    r.hypothesis.ids.push_back(prev);
    r.hypothesis.logprob += lp[best];
    if (prev == kEosId) {
      r.hypothesis.finished = true;
      break;
    }
  }
  r.truncated = !r.hypothesis.finished;
  r.hypothesis.score = NormalizedScore(r.hypothesis.logprob, r.hypothesis.length(), alpha);
  return r;
}

GreedyResult GreedyDecode(const Model& model, std::span<const TokenId> src, std::size_t max_len, double alpha) {
  auto session = model.StartSession(src);
  return GreedyDecode(*session, max_len, alpha);
}

void BeamConfig::Validate() const {
  if (beam_size < 1) throw DataError("beam_size must be at least 1");
  if (!(max_len_factor > 0.0)) throw DataError("max_len_factor must be positive");
  if (!(length_norm_alpha >= 0.0)) throw DataError("length_norm_alpha must be non-negative");
}

namespace {

struct Live {
  Hypothesis hyp;
  std::unique_ptr<DecoderSession> session;
};

struct Candidate {
  double total;
  double step;
  std::size_t parent;
  TokenId token;
};

bool Better(const Candidate& a, const Candidate& b) {
  if (a.total != b.total) return a.total > b.total;
  if (a.parent != b.parent) return a.parent < b.parent;
  if (a.step != b.step) return a.step > b.step;
  return a.token < b.token;
}

bool Ranked(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.ids < b.ids;
}

}  // namespace

std::vector<Hypothesis> BeamSearch(const DecoderSession& start, std::size_t max_len, const BeamConfig& config,
                                   std::vector<BeamStep>* trace) {
  config.Validate();
  const double alpha = config.length_norm_alpha;
  std::vector<Live> live;
  live.push_back({Hypothesis{{kBosId}, 0.0, false, 0.0}, start.Clone()});
  std::vector<Hypothesis> results;

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const auto lp = live[h].session->Advance(live[h].hyp.ids.back());
      for (std::size_t v = 0; v < lp.size(); ++v) {
        if (!Selectable(v)) continue;
        cands.push_back({live[h].hyp.logprob + lp[v], lp[v], h, static_cast<TokenId>(v)});
      }
    }
    if (cands.empty()) throw DataError("target vocabulary has no selectable tokens");
    const std::size_t keep = std::min(config.beam_size, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), Better);

    auto extend = [&](const Candidate& c) {
      Hypothesis h = live[c.parent].hyp;
      h.ids.push_back(c.token);
      h.logprob = c.total;
      h.finished = c.token == kEosId;
      h.score = NormalizedScore(h.logprob, h.length(), alpha);
      return h;
    };
    if (trace) {
      BeamStep s;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        (i < keep ? s.kept : s.pruned).push_back(cands[i].total);
        if (i >= keep && cands[i].token == kEosId) s.pruned_finished.push_back(extend(cands[i]));
      }
      trace->push_back(std::move(s));
    }

    std::vector<Live> next;
    for (std::size_t i = 0; i < keep; ++i) {
      Hypothesis h = extend(cands[i]);
      if (h.finished) {
        results.push_back(std::move(h));
      } else {
        next.push_back({std::move(h), live[cands[i].parent].session->Clone()});
      }
    }
    live = std::move(next);
  }
  for (auto& l : live) results.push_back(std::move(l.hyp));
  std::sort(results.begin(), results.end(), Ranked);
  return results;
}

std::vector<Hypothesis> BeamSearch(const Model& model, std::span<const TokenId> src, const BeamConfig& config,
                                   std::vector<BeamStep>* trace) {
  config.Validate();
  auto session = model.StartSession(src);
  return BeamSearch(*session, MaxDecodeLength(src.size(), config.max_len_factor), config, trace);
}

}  // namespace charnmt::decode

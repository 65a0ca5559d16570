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

#ifndef CHARNMT_COMMON_MODEL_H_
#define CHARNMT_COMMON_MODEL_H_

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "charnmt/common/batch.h"
#include "charnmt/common/types.h"
#include "charnmt/numcore/params.h"
#include "charnmt/numcore/rng.h"
#include "charnmt/numcore/tensor.h"

namespace charnmt {

// Incremental target-side state for one source sentence. Advance feeds the
// previous target token (BOS first) and returns log-probabilities of the
// next one.
class DecoderSession {
 public:
  virtual ~DecoderSession() = default;
  virtual std::unique_ptr<DecoderSession> Clone() const = 0;
  virtual std::vector<double> Advance(TokenId previous) = 0;
  virtual std::size_t vocab_size() const = 0;
};

template <typename T>
class Seq2SeqModel {
 public:
  virtual ~Seq2SeqModel() = default;

  virtual std::string architecture() const = 0;
  // key=value description of the architecture, enough to rebuild it.
  virtual std::map<std::string, std::string> ConfigEntries() const = 0;

  numcore::ParameterStore<T>& params() { return params_; }
  const numcore::ParameterStore<T>& params() const { return params_; }

  // Teacher-forced logits, row b * tgt_len + j predicts tgt_out(b, j).
  virtual numcore::Tensor<T> Logits(const Batch& batch, Mode mode, numcore::Rng& rng) const = 0;

  // Eval-mode decoding session for a single specials-free source sentence.
  virtual std::unique_ptr<DecoderSession> StartSession(std::span<const TokenId> src) const = 0;

  virtual std::size_t source_vocab_size() const = 0;
  virtual std::size_t target_vocab_size() const = 0;

 protected:
  explicit Seq2SeqModel(std::uint64_t seed) : params_(seed) {}

  numcore::ParameterStore<T> params_;
};

}  // namespace charnmt

#endif  // CHARNMT_COMMON_MODEL_H_

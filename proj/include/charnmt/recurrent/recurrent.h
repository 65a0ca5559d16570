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

#ifndef CHARNMT_RECURRENT_RECURRENT_H_
#define CHARNMT_RECURRENT_RECURRENT_H_

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "charnmt/common/batch.h"
#include "charnmt/common/model.h"
#include "charnmt/numcore/ops.h"

namespace charnmt::recurrent {

using numcore::Tensor;

struct LstmConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 512;
  std::size_t embedding_dim = 512;
  double dropout = 0.3;

  void Validate() const;
  std::map<std::string, std::string> ToEntries() const;
  static LstmConfig FromEntries(const std::map<std::string, std::string>& entries);
};

template <typename T>
struct LstmWeights {
  Tensor<T> w_ih;  // [input × 4H], gate blocks i, f, g, o
  Tensor<T> w_hh;  // [H × 4H]
  Tensor<T> bias;  // [4H], forget block initialised to 1
};

template <typename T>
LstmWeights<T> DeclareLstm(numcore::ParameterStore<T>& store, const std::string& prefix, std::size_t input_dim,
                           std::size_t hidden_dim);

template <typename T>
struct LstmState {
  Tensor<T> hidden;  // [B × H]
  Tensor<T> cell;    // [B × H]
};

// One step for a batch of rows. Rows with active[r] == false keep their state.
template <typename T>
LstmState<T> LstmCell(const Tensor<T>& input, const LstmState<T>& state, const LstmWeights<T>& w,
                      const std::vector<bool>& active = {});

template <typename T>
struct EncoderStates {
  Tensor<T> states;  // [batch*src_len × 2H], row = [forward h ; backward h]
  // Per layer: forward state after the last real token, backward state after
  // the first one.
  std::vector<LstmState<T>> forward_final;
  std::vector<LstmState<T>> backward_final;
};

template <typename T>
struct AttentionContext {
  Tensor<T> context;  // [B × value width]
  Tensor<T> weights;  // [B × 1 × 1 × src_len]
};

// Dot-product attention of one query row per sentence over its source
// positions. Throws if some sentence has every position blocked.
template <typename T>
AttentionContext<T> AttendDot(const Tensor<T>& query, const Tensor<T>& keys, const Tensor<T>& values,
                              std::size_t batch, const std::vector<bool>& blocked);

template <typename T>
struct DecoderState {
  std::vector<LstmState<T>> layers;
  Tensor<T> context;  // c_{j-1}, [B × 2H]
};

template <typename T>
struct StepOutput {
  Tensor<T> logits;  // [B × V]
  DecoderState<T> state;
  Tensor<T> attention;  // [B × 1 × 1 × src_len]
};

template <typename T>
class RecurrentModel final : public Seq2SeqModel<T> {
 public:
  RecurrentModel(const LstmConfig& config, std::size_t src_vocab, std::size_t tgt_vocab, std::uint64_t seed);

  const LstmConfig& config() const { return config_; }

  std::string architecture() const override { return "recurrent"; }
  std::map<std::string, std::string> ConfigEntries() const override;
  std::size_t source_vocab_size() const override { return src_vocab_; }
  std::size_t target_vocab_size() const override { return tgt_vocab_; }

  EncoderStates<T> Encode(const PaddedIds& src, Mode mode, numcore::Rng& rng) const;
  // Bridge from the encoder's final states; context starts at zero.
  DecoderState<T> InitialState(const EncoderStates<T>& enc, std::size_t batch) const;
  // Source keys for attention, [batch*src_len × H].
  Tensor<T> AttentionKeys(const EncoderStates<T>& enc) const;
  StepOutput<T> DecoderStep(const DecoderState<T>& state, std::span<const TokenId> previous,
                            const EncoderStates<T>& enc, const Tensor<T>& keys, const std::vector<bool>& src_blocked,
                            Mode mode, numcore::Rng& rng) const;

  Tensor<T> Logits(const Batch& batch, Mode mode, numcore::Rng& rng) const override;
  std::unique_ptr<DecoderSession> StartSession(std::span<const TokenId> src) const override;

  // Encoder direction weights, exposed for tests.
  const std::vector<LstmWeights<T>>& forward_weights() const { return enc_fwd_; }
  const std::vector<LstmWeights<T>>& backward_weights() const { return enc_bwd_; }

 private:
  struct Bridge {
    Tensor<T> h_w, h_b, c_w, c_b;
  };

  LstmConfig config_;
  std::size_t src_vocab_;
  std::size_t tgt_vocab_;
  Tensor<T> src_embed_, tgt_embed_;
  std::vector<LstmWeights<T>> enc_fwd_, enc_bwd_, dec_;
  std::vector<Bridge> bridge_;
  Tensor<T> attn_key_, combine_w_, combine_b_, out_w_, out_b_;
};

extern template class RecurrentModel<float>;
extern template class RecurrentModel<double>;

}  // namespace charnmt::recurrent

#endif  // CHARNMT_RECURRENT_RECURRENT_H_

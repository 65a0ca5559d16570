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

#ifndef CHARNMT_TRANSFORMER_TRANSFORMER_H_
#define CHARNMT_TRANSFORMER_TRANSFORMER_H_

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "charnmt/common/batch.h"
#include "charnmt/common/model.h"
#include "charnmt/numcore/ops.h"

namespace charnmt::transformer {

using numcore::Tensor;

struct TransformerConfig {
  std::size_t num_layers = 4;
  std::size_t model_dim = 512;
  std::size_t num_heads = 8;
  std::size_t ffn_dim = 1024;
  double dropout = 0.2;
  double embedding_dropout = 0.1;
  std::size_t max_positions = 1024;

  void Validate() const;
  std::map<std::string, std::string> ToEntries() const;
  static TransformerConfig FromEntries(const std::map<std::string, std::string>& entries);
};

template <typename T>
struct AttentionOutput {
  Tensor<T> values;   // [target_len × width]
  Tensor<T> weights;  // [heads × target_len × source_len]
};

// Sinusoidal table: even columns sin(pos / 10000^(2i/d)), odd columns cos.
template <typename T>
Tensor<T> PositionalEncoding(std::size_t length, std::size_t model_dim, std::size_t max_positions = 1024);

// softmax(q kᵀ / sqrt(d_k) with blocked cells at -inf) v for one head.
// `blocked` is [target_len × source_len] or empty.
template <typename T>
AttentionOutput<T> ScaledDotAttention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                      const std::vector<bool>& blocked);

template <typename T>
struct MultiHeadParams {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
MultiHeadParams<T> DeclareMultiHead(numcore::ParameterStore<T>& store, const std::string& prefix, std::size_t dim);

// Projects queries from x_q and keys/values from x_kv, attends per head and
// recombines. x_q is [batch*query_len × dim], x_kv [batch*key_len × dim].
template <typename T>
AttentionOutput<T> MultiHeadAttention(const Tensor<T>& x_q, const Tensor<T>& x_kv, const MultiHeadParams<T>& p,
                                      const numcore::AttentionLayout& layout);

struct Masks {
  std::vector<bool> padding;  // [src_len], true at PAD
  std::vector<bool> causal;   // [tgt_len × tgt_len], true strictly above the diagonal
};

Masks MakeMasks(std::span<const TokenId> src_ids, std::span<const TokenId> tgt_ids, TokenId pad_id = kPadId);

// Attention weights collected during a forward pass, one entry per layer,
// each [batch × heads × query_len × key_len].
template <typename T>
struct AttentionTrace {
  std::vector<Tensor<T>> encoder_self;
  std::vector<Tensor<T>> decoder_self;
  std::vector<Tensor<T>> cross;
};

template <typename T>
class TransformerModel final : public Seq2SeqModel<T> {
 public:
  TransformerModel(const TransformerConfig& config, std::size_t src_vocab, std::size_t tgt_vocab, std::uint64_t seed);

  const TransformerConfig& config() const { return config_; }

  std::string architecture() const override { return "transformer"; }
  std::map<std::string, std::string> ConfigEntries() const override;
  std::size_t source_vocab_size() const override { return src_vocab_; }
  std::size_t target_vocab_size() const override { return tgt_vocab_; }

  // [batch*src_len × model_dim].
  Tensor<T> Encode(const PaddedIds& src, Mode mode, numcore::Rng& rng, AttentionTrace<T>* trace = nullptr) const;
  // [batch*tgt_len × tgt_vocab] logits.
  Tensor<T> Decode(const PaddedIds& tgt_in, const Tensor<T>& memory, const PaddedIds& src, Mode mode,
                   numcore::Rng& rng, AttentionTrace<T>* trace = nullptr) const;

  Tensor<T> Logits(const Batch& batch, Mode mode, numcore::Rng& rng) const override;
  std::unique_ptr<DecoderSession> StartSession(std::span<const TokenId> src) const override;

 private:
  struct EncoderLayer {
    MultiHeadParams<T> self;
    Tensor<T> ln1_g, ln1_b, ff_w1, ff_b1, ff_w2, ff_b2, ln2_g, ln2_b;
  };
  struct DecoderLayer {
    MultiHeadParams<T> self, cross;
    Tensor<T> ln1_g, ln1_b, ln2_g, ln2_b, ff_w1, ff_b1, ff_w2, ff_b2, ln3_g, ln3_b;
  };

  Tensor<T> Embed(const Tensor<T>& table, const PaddedIds& ids, Mode mode, numcore::Rng& rng) const;
  Tensor<T> FeedForward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1, const Tensor<T>& w2,
                        const Tensor<T>& b2) const;
  Tensor<T> Sublayer(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& g, const Tensor<T>& b, Mode mode,
                     numcore::Rng& rng) const;

  TransformerConfig config_;
  std::size_t src_vocab_;
  std::size_t tgt_vocab_;
  Tensor<T> src_embed_, tgt_embed_, out_w_, out_b_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
};

extern template class TransformerModel<float>;
extern template class TransformerModel<double>;

}  // namespace charnmt::transformer

#endif  // CHARNMT_TRANSFORMER_TRANSFORMER_H_

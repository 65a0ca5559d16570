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

#include "charnmt/transformer/transformer.h"

#include <cmath>
#include <cstdio>

#include "charnmt/common/config_entries.h"
#include "charnmt/common/error.h"

namespace charnmt::transformer {

using numcore::AttentionLayout;
using numcore::Init;

namespace {

template <typename T>
Tensor<T> Affine(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return numcore::AddRowBias(numcore::MatMul(x, w), b);
}

}  // namespace

void TransformerConfig::Validate() const {
  if (num_layers == 0 || model_dim == 0 || num_heads == 0 || ffn_dim == 0 || max_positions == 0) {
    throw ParameterError("transformer dimensions must be positive");
  }
  if (model_dim % num_heads != 0) {
    throw ParameterError("model_dim " + std::to_string(model_dim) + " not divisible by num_heads " +
                         std::to_string(num_heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0) || !(embedding_dropout >= 0.0 && embedding_dropout < 1.0)) {
    throw ParameterError("dropout rates must lie in [0, 1)");
  }
}

std::map<std::string, std::string> TransformerConfig::ToEntries() const {
  return {{"num_layers", std::to_string(num_layers)},
          {"model_dim", std::to_string(model_dim)},
          {"num_heads", std::to_string(num_heads)},
          {"ffn_dim", std::to_string(ffn_dim)},
          {"dropout", FormatReal(dropout)},
          {"embedding_dropout", FormatReal(embedding_dropout)},
          {"max_positions", std::to_string(max_positions)}};
}

TransformerConfig TransformerConfig::FromEntries(const std::map<std::string, std::string>& e) {
  TransformerConfig c;
  c.num_layers = ReadSize(e, "num_layers", c.num_layers);
  c.model_dim = ReadSize(e, "model_dim", c.model_dim);
  c.num_heads = ReadSize(e, "num_heads", c.num_heads);
  c.ffn_dim = ReadSize(e, "ffn_dim", c.ffn_dim);
  c.dropout = ReadReal(e, "dropout", c.dropout);
  c.embedding_dropout = ReadReal(e, "embedding_dropout", c.embedding_dropout);
  c.max_positions = ReadSize(e, "max_positions", c.max_positions);
  c.Validate();
  return c;
}

template <typename T>
Tensor<T> PositionalEncoding(std::size_t length, std::size_t model_dim, std::size_t max_positions) {
  if (length > max_positions) {
    throw CapacityError("sequence length " + std::to_string(length) + " exceeds max_positions " +
                        std::to_string(max_positions));
  }
  std::vector<T> data(length * model_dim);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t c = 0; c < model_dim; ++c) {
      const double rate = std::pow(10000.0, -static_cast<double>(c - c % 2) / static_cast<double>(model_dim));
      const double angle = static_cast<double>(pos) * rate;
      data[pos * model_dim + c] = static_cast<T>(c % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return Tensor<T>({length, model_dim}, std::move(data));
}

template <typename T>
AttentionOutput<T> ScaledDotAttention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                      const std::vector<bool>& blocked) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2 || q.cols() != k.cols() || k.rows() != v.rows()) {
    throw DimensionError("scaled_dot_attention: q " + numcore::ShapeToString(q.shape()) + ", k " +
                         numcore::ShapeToString(k.shape()) + ", v " + numcore::ShapeToString(v.shape()));
  }
  if (!blocked.empty() && blocked.size() != q.rows() * k.rows()) {
    throw DimensionError("scaled_dot_attention: mask has " + std::to_string(blocked.size()) + " cells, expected " +
                         std::to_string(q.rows()) + "x" + std::to_string(k.rows()));
  }
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(q.cols())));
  auto scores = numcore::Scale(numcore::MatMul(q, k, false, true), scale);
  auto weights = numcore::MaskedSoftmaxRows(scores, blocked.empty() ? std::vector<bool>(scores.size()) : blocked);
  auto values = numcore::MatMul(weights, v);
  return {values, Tensor<T>({1, q.rows(), k.rows()}, std::vector<T>(weights.data().begin(), weights.data().end()))};
}

template <typename T>
MultiHeadParams<T> DeclareMultiHead(numcore::ParameterStore<T>& s, const std::string& prefix, std::size_t dim) {
  MultiHeadParams<T> p;
  p.wq = s.Create(prefix + ".wq", {dim, dim}, Init::kXavierUniform);
  p.bq = s.Create(prefix + ".bq", {dim}, Init::kZeros);
  p.wk = s.Create(prefix + ".wk", {dim, dim}, Init::kXavierUniform);
  p.bk = s.Create(prefix + ".bk", {dim}, Init::kZeros);
  p.wv = s.Create(prefix + ".wv", {dim, dim}, Init::kXavierUniform);
  p.bv = s.Create(prefix + ".bv", {dim}, Init::kZeros);
  p.wo = s.Create(prefix + ".wo", {dim, dim}, Init::kXavierUniform);
  p.bo = s.Create(prefix + ".bo", {dim}, Init::kZeros);
  return p;
}

template <typename T>
AttentionOutput<T> MultiHeadAttention(const Tensor<T>& x_q, const Tensor<T>& x_kv, const MultiHeadParams<T>& p,
                                      const AttentionLayout& layout) {
  auto q = Affine(x_q, p.wq, p.bq);
  auto k = Affine(x_kv, p.wk, p.bk);
  auto v = Affine(x_kv, p.wv, p.bv);
  AttentionLayout scaled = layout;
  scaled.scale = 1.0 / std::sqrt(static_cast<double>(q.cols() / layout.heads));
  auto att = numcore::BatchedAttention(q, k, v, scaled);
  return {Affine(att.values, p.wo, p.bo), att.weights};
}

Masks MakeMasks(std::span<const TokenId> src_ids, std::span<const TokenId> tgt_ids, TokenId pad_id) {
  Masks m;
  m.padding.resize(src_ids.size());
  for (std::size_t i = 0; i < src_ids.size(); ++i) m.padding[i] = src_ids[i] == pad_id;
  const std::size_t n = tgt_ids.size();
  m.causal.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m.causal[i * n + j] = j > i;
  }
  return m;
}

template <typename T>
TransformerModel<T>::TransformerModel(const TransformerConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                                      std::uint64_t seed)
    : Seq2SeqModel<T>(seed), config_(config), src_vocab_(src_vocab), tgt_vocab_(tgt_vocab) {
  config_.Validate();
  if (src_vocab <= kNumSpecials || tgt_vocab <= kNumSpecials) {
    throw ParameterError("vocabularies must contain at least one regular token");
  }
  auto& s = this->params_;
  const std::size_t d = config_.model_dim, f = config_.ffn_dim;
  src_embed_ = s.Create("src_embedding", {src_vocab, d}, Init::kXavierUniform);
  tgt_embed_ = s.Create("tgt_embedding", {tgt_vocab, d}, Init::kXavierUniform);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    EncoderLayer e;
    e.self = DeclareMultiHead(s, p + ".self", d);
    e.ln1_g = s.Create(p + ".ln1.gain", {d}, Init::kOnes);
    e.ln1_b = s.Create(p + ".ln1.bias", {d}, Init::kZeros);
    e.ff_w1 = s.Create(p + ".ffn.w1", {d, f}, Init::kXavierUniform);
    e.ff_b1 = s.Create(p + ".ffn.b1", {f}, Init::kZeros);
    e.ff_w2 = s.Create(p + ".ffn.w2", {f, d}, Init::kXavierUniform);
    e.ff_b2 = s.Create(p + ".ffn.b2", {d}, Init::kZeros);
    e.ln2_g = s.Create(p + ".ln2.gain", {d}, Init::kOnes);
    e.ln2_b = s.Create(p + ".ln2.bias", {d}, Init::kZeros);
    encoder_.push_back(e);
  }
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    DecoderLayer e;
    e.self = DeclareMultiHead(s, p + ".self", d);
    e.ln1_g = s.Create(p + ".ln1.gain", {d}, Init::kOnes);
    e.ln1_b = s.Create(p + ".ln1.bias", {d}, Init::kZeros);
    e.cross = DeclareMultiHead(s, p + ".cross", d);
    e.ln2_g = s.Create(p + ".ln2.gain", {d}, Init::kOnes);
    e.ln2_b = s.Create(p + ".ln2.bias", {d}, Init::kZeros);
    e.ff_w1 = s.Create(p + ".ffn.w1", {d, f}, Init::kXavierUniform);
    e.ff_b1 = s.Create(p + ".ffn.b1", {f}, Init::kZeros);
    e.ff_w2 = s.Create(p + ".ffn.w2", {f, d}, Init::kXavierUniform);
    e.ff_b2 = s.Create(p + ".ffn.b2", {d}, Init::kZeros);
    e.ln3_g = s.Create(p + ".ln3.gain", {d}, Init::kOnes);
    e.ln3_b = s.Create(p + ".ln3.bias", {d}, Init::kZeros);
    decoder_.push_back(e);
  }
  out_w_ = s.Create("output.weight", {d, tgt_vocab}, Init::kXavierUniform);
  out_b_ = s.Create("output.bias", {tgt_vocab}, Init::kZeros);
}

template <typename T>
std::map<std::string, std::string> TransformerModel<T>::ConfigEntries() const {
  auto e = config_.ToEntries();
  e["src_vocab"] = std::to_string(src_vocab_);
  e["tgt_vocab"] = std::to_string(tgt_vocab_);
  return e;
}

template <typename T>
Tensor<T> TransformerModel<T>::Embed(const Tensor<T>& table, const PaddedIds& ids, Mode mode,
                                     numcore::Rng& rng) const {
  const std::size_t d = config_.model_dim;
  auto pe = PositionalEncoding<T>(ids.len, d, config_.max_positions);
  std::vector<std::size_t> rows;
  rows.reserve(ids.batch * ids.len);
  for (std::size_t b = 0; b < ids.batch; ++b) {
    for (std::size_t i = 0; i < ids.len; ++i) rows.push_back(i);
  }
  auto pos = numcore::GatherRows(pe, rows);
  auto emb = numcore::Scale(numcore::EmbeddingLookup(table, ids.ids), static_cast<T>(std::sqrt(double(d))));
  return numcore::Dropout(numcore::Add(emb, pos), config_.embedding_dropout, rng, mode);
}

template <typename T>
Tensor<T> TransformerModel<T>::FeedForward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1,
                                           const Tensor<T>& w2, const Tensor<T>& b2) const {
  return Affine(numcore::Relu(Affine(x, w1, b1)), w2, b2);
}

template <typename T>
Tensor<T> TransformerModel<T>::Sublayer(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& g,
                                        const Tensor<T>& b, Mode mode, numcore::Rng& rng) const {
  return numcore::LayerNorm(numcore::Add(x, numcore::Dropout(y, config_.dropout, rng, mode)), g, b, T(1e-6));
}

template <typename T>
Tensor<T> TransformerModel<T>::Encode(const PaddedIds& src, Mode mode, numcore::Rng& rng,
                                      AttentionTrace<T>* trace) const {
  if (src.batch == 0 || src.len == 0) throw DataError("encoder input is empty");
  auto x = Embed(src_embed_, src, mode, rng);
  AttentionLayout layout;
  layout.batch = src.batch;
  layout.query_len = layout.key_len = src.len;
  layout.heads = config_.num_heads;
  layout.key_blocked = src.PadMask();
  for (const auto& layer : encoder_) {
    auto att = MultiHeadAttention(x, x, layer.self, layout);
    if (trace) trace->encoder_self.push_back(att.weights);
    x = Sublayer(x, att.values, layer.ln1_g, layer.ln1_b, mode, rng);
    x = Sublayer(x, FeedForward(x, layer.ff_w1, layer.ff_b1, layer.ff_w2, layer.ff_b2), layer.ln2_g, layer.ln2_b,
                 mode, rng);
  }
  return x;
}

template <typename T>
Tensor<T> TransformerModel<T>::Decode(const PaddedIds& tgt_in, const Tensor<T>& memory, const PaddedIds& src,
                                      Mode mode, numcore::Rng& rng, AttentionTrace<T>* trace) const {
  if (tgt_in.batch != src.batch) throw DimensionError("decoder batch differs from encoder batch");
  if (tgt_in.len == 0) throw DataError("decoder input is empty");
  auto y = Embed(tgt_embed_, tgt_in, mode, rng);
  AttentionLayout self;
  self.batch = tgt_in.batch;
  self.query_len = self.key_len = tgt_in.len;
  self.heads = config_.num_heads;
  self.key_blocked = tgt_in.PadMask();
  self.causal = true;
  AttentionLayout cross;
  cross.batch = src.batch;
  cross.query_len = tgt_in.len;
  cross.key_len = src.len;
  cross.heads = config_.num_heads;
  cross.key_blocked = src.PadMask();
  for (const auto& layer : decoder_) {
    auto sa = MultiHeadAttention(y, y, layer.self, self);
    if (trace) trace->decoder_self.push_back(sa.weights);
    y = Sublayer(y, sa.values, layer.ln1_g, layer.ln1_b, mode, rng);
    auto ca = MultiHeadAttention(y, memory, layer.cross, cross);
    if (trace) trace->cross.push_back(ca.weights);
    y = Sublayer(y, ca.values, layer.ln2_g, layer.ln2_b, mode, rng);
    y = Sublayer(y, FeedForward(y, layer.ff_w1, layer.ff_b1, layer.ff_w2, layer.ff_b2), layer.ln3_g, layer.ln3_b,
                 mode, rng);
  }
  return Affine(y, out_w_, out_b_);
}

template <typename T>
Tensor<T> TransformerModel<T>::Logits(const Batch& batch, Mode mode, numcore::Rng& rng) const {
  auto memory = Encode(batch.src, mode, rng);
  return Decode(batch.tgt_in, memory, batch.src, mode, rng);
}

namespace {

// Recomputes the decoder over the whole prefix at every step.
template <typename T>
class TransformerSession final : public DecoderSession {
 public:
  TransformerSession(const TransformerModel<T>& model, PaddedIds src, Tensor<T> memory)
      : model_(model), src_(std::move(src)), memory_(std::move(memory)) {}

  std::unique_ptr<DecoderSession> Clone() const override { return std::make_unique<TransformerSession>(*this); }

  std::vector<double> Advance(TokenId previous) override {
    prefix_.push_back(previous);
    PaddedIds tgt{1, prefix_.size(), prefix_};
    numcore::NoGradScope<T> no_grad;
    numcore::Rng unused(0);
    auto logits = model_.Decode(tgt, memory_, src_, Mode::kEval, unused);
    const std::size_t v = logits.cols();
    return numcore::LogSoftmaxRow<T>(logits.data().subspan((prefix_.size() - 1) * v, v));
  }

  std::size_t vocab_size() const override { return model_.target_vocab_size(); }

 private:
  const TransformerModel<T>& model_;
  PaddedIds src_;
  Tensor<T> memory_;
  IdSequence prefix_;
};

}  // namespace

template <typename T>
std::unique_ptr<DecoderSession> TransformerModel<T>::StartSession(std::span<const TokenId> src) const {
  PaddedIds ids{1, src.size(), IdSequence(src.begin(), src.end())};
  numcore::NoGradScope<T> no_grad;
  numcore::Rng unused(0);
  auto memory = Encode(ids, Mode::kEval, unused);
  return std::make_unique<TransformerSession<T>>(*this, std::move(ids), std::move(memory));
}

#define CHARNMT_INSTANTIATE_TRANSFORMER(T)                                                                        \
  template Tensor<T> PositionalEncoding<T>(std::size_t, std::size_t, std::size_t);                                \
  template AttentionOutput<T> ScaledDotAttention<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                                    const std::vector<bool>&);                                    \
  template MultiHeadParams<T> DeclareMultiHead<T>(numcore::ParameterStore<T>&, const std::string&, std::size_t); \
  template AttentionOutput<T> MultiHeadAttention<T>(const Tensor<T>&, const Tensor<T>&,                          \
                                                    const MultiHeadParams<T>&, const AttentionLayout&);           \
  template class TransformerModel<T>;

CHARNMT_INSTANTIATE_TRANSFORMER(float)
CHARNMT_INSTANTIATE_TRANSFORMER(double)

}  // namespace charnmt::transformer

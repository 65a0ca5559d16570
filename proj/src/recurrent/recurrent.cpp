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

#include "charnmt/recurrent/recurrent.h"

#include "charnmt/common/config_entries.h"
#include "charnmt/common/error.h"

namespace charnmt::recurrent {

using numcore::Init;

namespace {

template <typename T>
LstmState<T> FromGates(const Tensor<T>& gates, const LstmState<T>& state, const std::vector<bool>& active) {
  const std::size_t h = state.hidden.cols();
  auto packed = numcore::LstmPointwise(gates, state.hidden, state.cell, active);
  return {numcore::SliceCols(packed, 0, h), numcore::SliceCols(packed, h, h)};
}

// Reorders time-major step outputs (row t*B + b) into sentence-major rows
// (b*L + t).
template <typename T>
Tensor<T> SentenceMajor(const std::vector<Tensor<T>>& steps, std::size_t batch) {
  const std::size_t len = steps.size();
  std::vector<std::size_t> rows(batch * len);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < len; ++t) rows[b * len + t] = t * batch + b;
  }
  return numcore::GatherRows(numcore::ConcatRows(steps), rows);
}

}  // namespace

void LstmConfig::Validate() const {
  if (num_layers == 0 || hidden_dim == 0 || embedding_dim == 0) {
    throw ParameterError("recurrent dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
}

std::map<std::string, std::string> LstmConfig::ToEntries() const {
  return {{"num_layers", std::to_string(num_layers)},
          {"hidden_dim", std::to_string(hidden_dim)},
          {"embedding_dim", std::to_string(embedding_dim)},
          {"dropout", FormatReal(dropout)}};
}

LstmConfig LstmConfig::FromEntries(const std::map<std::string, std::string>& e) {
  LstmConfig c;
  c.num_layers = ReadSize(e, "num_layers", c.num_layers);
  c.hidden_dim = ReadSize(e, "hidden_dim", c.hidden_dim);
  c.embedding_dim = ReadSize(e, "embedding_dim", c.embedding_dim);
  c.dropout = ReadReal(e, "dropout", c.dropout);
  c.Validate();
  return c;
}

template <typename T>
LstmWeights<T> DeclareLstm(numcore::ParameterStore<T>& store, const std::string& prefix, std::size_t input_dim,
                           std::size_t hidden_dim) {
  LstmWeights<T> w;
  w.w_ih = store.Create(prefix + ".w_ih", {input_dim, 4 * hidden_dim}, Init::kXavierUniform);
  w.w_hh = store.Create(prefix + ".w_hh", {hidden_dim, 4 * hidden_dim}, Init::kXavierUniform);
  w.bias = store.Create(prefix + ".bias", {4 * hidden_dim}, Init::kZeros);
  auto b = w.bias.mutable_data();
  for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) b[i] = T(1);
  return w;
}

template <typename T>
LstmState<T> LstmCell(const Tensor<T>& input, const LstmState<T>& state, const LstmWeights<T>& w,
                      const std::vector<bool>& active) {
  auto gates = numcore::AddRowBias(
      numcore::Add(numcore::MatMul(input, w.w_ih), numcore::MatMul(state.hidden, w.w_hh)), w.bias);
  return FromGates(gates, state, active);
}

template <typename T>
AttentionContext<T> AttendDot(const Tensor<T>& query, const Tensor<T>& keys, const Tensor<T>& values,
                              std::size_t batch, const std::vector<bool>& blocked) {
  if (batch == 0 || keys.rows() % batch != 0) {
    throw DimensionError("attend_dot: " + std::to_string(keys.rows()) + " key rows for batch " +
                         std::to_string(batch));
  }
  const std::size_t len = keys.rows() / batch;
  if (!blocked.empty()) {
    for (std::size_t b = 0; b < batch; ++b) {
      bool any = false;
      for (std::size_t i = 0; i < len; ++i) any = any || !blocked[b * len + i];
      if (!any) throw DataError("attend_dot: sentence " + std::to_string(b) + " has every source position masked");
    }
  }
  numcore::AttentionLayout layout;
  layout.batch = batch;
  layout.query_len = 1;
  layout.key_len = len;
  layout.key_blocked = blocked;
  auto r = numcore::BatchedAttention(query, keys, values, layout);
  return {r.values, r.weights};
}

template <typename T>
RecurrentModel<T>::RecurrentModel(const LstmConfig& config, std::size_t src_vocab, std::size_t tgt_vocab,
                                  std::uint64_t seed)
    : Seq2SeqModel<T>(seed), config_(config), src_vocab_(src_vocab), tgt_vocab_(tgt_vocab) {
  config_.Validate();
  if (src_vocab <= kNumSpecials || tgt_vocab <= kNumSpecials) {
    throw ParameterError("vocabularies must contain at least one regular token");
  }
  auto& s = this->params_;
  const std::size_t h = config_.hidden_dim, e = config_.embedding_dim;
  src_embed_ = s.Create("src_embedding", {src_vocab, e}, Init::kXavierUniform);
  tgt_embed_ = s.Create("tgt_embedding", {tgt_vocab, e}, Init::kXavierUniform);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    const std::size_t in = l == 0 ? e : 2 * h;
    enc_fwd_.push_back(DeclareLstm(s, p + ".forward", in, h));
    enc_bwd_.push_back(DeclareLstm(s, p + ".backward", in, h));
  }
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string p = "bridge." + std::to_string(l);
    Bridge b;
    b.h_w = s.Create(p + ".hidden.weight", {2 * h, h}, Init::kXavierUniform);
    b.h_b = s.Create(p + ".hidden.bias", {h}, Init::kZeros);
    b.c_w = s.Create(p + ".cell.weight", {2 * h, h}, Init::kXavierUniform);
    b.c_b = s.Create(p + ".cell.bias", {h}, Init::kZeros);
    bridge_.push_back(b);
  }
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::size_t in = l == 0 ? e + 2 * h : h;
    dec_.push_back(DeclareLstm(s, "decoder." + std::to_string(l), in, h));
  }
  attn_key_ = s.Create("attention.key", {2 * h, h}, Init::kXavierUniform);
  combine_w_ = s.Create("attention.combine.weight", {3 * h, h}, Init::kXavierUniform);
  combine_b_ = s.Create("attention.combine.bias", {h}, Init::kZeros);
  out_w_ = s.Create("output.weight", {h, tgt_vocab}, Init::kXavierUniform);
  out_b_ = s.Create("output.bias", {tgt_vocab}, Init::kZeros);
}

template <typename T>
std::map<std::string, std::string> RecurrentModel<T>::ConfigEntries() const {
  auto e = config_.ToEntries();
  e["src_vocab"] = std::to_string(src_vocab_);
  e["tgt_vocab"] = std::to_string(tgt_vocab_);
  return e;
}

template <typename T>
EncoderStates<T> RecurrentModel<T>::Encode(const PaddedIds& src, Mode mode, numcore::Rng& rng) const {
  if (src.batch == 0 || src.len == 0) throw DataError("recurrent encoder input is empty");
  const std::size_t nb = src.batch, len = src.len, h = config_.hidden_dim;
  std::vector<std::size_t> lengths(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    lengths[b] = src.Length(b);
    if (lengths[b] == 0) throw DataError("recurrent encoder: sentence " + std::to_string(b) + " is empty");
  }
  EncoderStates<T> out;
  Tensor<T> x = numcore::EmbeddingLookup(src_embed_, src.ids);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    if (l > 0) x = numcore::Dropout(x, config_.dropout, rng, mode);
    std::vector<Tensor<T>> halves;
    for (int dir = 0; dir < 2; ++dir) {
      const LstmWeights<T>& w = dir == 0 ? enc_fwd_[l] : enc_bwd_[l];
      // Input projections for every position at once.
      auto xw = numcore::AddRowBias(numcore::MatMul(x, w.w_ih), w.bias);
      LstmState<T> state{Tensor<T>::Zeros({nb, h}), Tensor<T>::Zeros({nb, h})};
      std::vector<Tensor<T>> steps(len);
      for (std::size_t s = 0; s < len; ++s) {
        const std::size_t t = dir == 0 ? s : len - 1 - s;
        std::vector<std::size_t> rows(nb);
        std::vector<bool> active(nb);
        for (std::size_t b = 0; b < nb; ++b) {
          rows[b] = b * len + t;
          active[b] = t < lengths[b];
        }
        auto gates = numcore::Add(numcore::GatherRows(xw, rows), numcore::MatMul(state.hidden, w.w_hh));
        state = FromGates(gates, state, active);
        steps[t] = state.hidden;
      }
      (dir == 0 ? out.forward_final : out.backward_final).push_back(state);
      halves.push_back(SentenceMajor(steps, nb));
    }
    x = numcore::ConcatCols(halves);
  }
  out.states = x;
  return out;
}

template <typename T>
DecoderState<T> RecurrentModel<T>::InitialState(const EncoderStates<T>& enc, std::size_t batch) const {
  DecoderState<T> st;
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const Bridge& b = bridge_[l];
    auto hs = numcore::ConcatCols<T>({enc.forward_final[l].hidden, enc.backward_final[l].hidden});
    auto cs = numcore::ConcatCols<T>({enc.forward_final[l].cell, enc.backward_final[l].cell});
    st.layers.push_back({numcore::AddRowBias(numcore::MatMul(hs, b.h_w), b.h_b),
                         numcore::AddRowBias(numcore::MatMul(cs, b.c_w), b.c_b)});
  }
  st.context = Tensor<T>::Zeros({batch, 2 * config_.hidden_dim});
  return st;
}

template <typename T>
Tensor<T> RecurrentModel<T>::AttentionKeys(const EncoderStates<T>& enc) const {
  return numcore::MatMul(enc.states, attn_key_);
}

template <typename T>
StepOutput<T> RecurrentModel<T>::DecoderStep(const DecoderState<T>& state, std::span<const TokenId> previous,
                                             const EncoderStates<T>& enc, const Tensor<T>& keys,
                                             const std::vector<bool>& src_blocked, Mode mode,
                                             numcore::Rng& rng) const {
  const std::size_t nb = previous.size();
  if (state.context.rows() != nb) throw DimensionError("decoder step: state batch differs from token batch");
  auto emb = numcore::EmbeddingLookup(tgt_embed_, previous);
  Tensor<T> x = numcore::ConcatCols<T>({emb, state.context});
  StepOutput<T> out;
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    if (l > 0) x = numcore::Dropout(x, config_.dropout, rng, mode);
    auto next = LstmCell(x, state.layers[l], dec_[l]);
    out.state.layers.push_back(next);
    x = next.hidden;
  }
  auto att = AttendDot(x, keys, enc.states, nb, src_blocked);
  out.state.context = att.context;
  out.attention = att.weights;
  auto combined = numcore::Tanh(
      numcore::AddRowBias(numcore::MatMul(numcore::ConcatCols<T>({x, att.context}), combine_w_), combine_b_));
  out.logits = numcore::AddRowBias(numcore::MatMul(combined, out_w_), out_b_);
  return out;
}

template <typename T>
Tensor<T> RecurrentModel<T>::Logits(const Batch& batch, Mode mode, numcore::Rng& rng) const {
  auto enc = Encode(batch.src, mode, rng);
  auto keys = AttentionKeys(enc);
  const auto blocked = batch.src.PadMask();
  const std::size_t nb = batch.tgt_in.batch, len = batch.tgt_in.len;
  auto state = InitialState(enc, nb);
  std::vector<Tensor<T>> steps;
  IdSequence column(nb);
  for (std::size_t j = 0; j < len; ++j) {
    for (std::size_t b = 0; b < nb; ++b) column[b] = batch.tgt_in.at(b, j);
    auto step = DecoderStep(state, column, enc, keys, blocked, mode, rng);
    steps.push_back(step.logits);
    state = std::move(step.state);
  }
  return SentenceMajor(steps, nb);
}

namespace {

template <typename T>
class RecurrentSession final : public DecoderSession {
 public:
  RecurrentSession(const RecurrentModel<T>& model, EncoderStates<T> enc, Tensor<T> keys, DecoderState<T> state)
      : model_(model), enc_(std::move(enc)), keys_(std::move(keys)), state_(std::move(state)) {}

  std::unique_ptr<DecoderSession> Clone() const override { return std::make_unique<RecurrentSession>(*this); }

  std::vector<double> Advance(TokenId previous) override {
    numcore::NoGradScope<T> no_grad;
    numcore::Rng unused(0);
    const TokenId ids[1] = {previous};
    auto step = model_.DecoderStep(state_, ids, enc_, keys_, {}, Mode::kEval, unused);
    state_ = std::move(step.state);
    return numcore::LogSoftmaxRow<T>(step.logits.data());
  }

  std::size_t vocab_size() const override { return model_.target_vocab_size(); }

 private:
  const RecurrentModel<T>& model_;
  EncoderStates<T> enc_;
  Tensor<T> keys_;
  DecoderState<T> state_;
};

}  // namespace

template <typename T>
std::unique_ptr<DecoderSession> RecurrentModel<T>::StartSession(std::span<const TokenId> src) const {
  PaddedIds ids{1, src.size(), IdSequence(src.begin(), src.end())};
  numcore::NoGradScope<T> no_grad;
  numcore::Rng unused(0);
  auto enc = Encode(ids, Mode::kEval, unused);
  auto keys = AttentionKeys(enc);
  auto state = InitialState(enc, 1);
  return std::make_unique<RecurrentSession<T>>(*this, std::move(enc), std::move(keys), std::move(state));
}

#define CHARNMT_INSTANTIATE_RECURRENT(T)                                                                       \
  template LstmWeights<T> DeclareLstm<T>(numcore::ParameterStore<T>&, const std::string&, std::size_t,      \
                                         std::size_t);                                                       \
  template LstmState<T> LstmCell<T>(const Tensor<T>&, const LstmState<T>&, const LstmWeights<T>&,           \
                                    const std::vector<bool>&);                                               \
  template AttentionContext<T> AttendDot<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t, \
                                            const std::vector<bool>&);                                       \
  template class RecurrentModel<T>;

CHARNMT_INSTANTIATE_RECURRENT(float)
CHARNMT_INSTANTIATE_RECURRENT(double)

}  // namespace charnmt::recurrent

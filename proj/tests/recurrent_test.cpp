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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "charnmt/common/error.h"
#include "charnmt/recurrent/recurrent.h"
#include "testing/grad_check.h"

namespace charnmt::recurrent {
namespace {

using numcore::Rng;
using testing::CheckGradients;
using testing::Project;
using testing::RandomTensor;
using TD = Tensor<double>;

LstmConfig Tiny() {
  LstmConfig c;
  c.num_layers = 2;
  c.hidden_dim = 8;
  c.embedding_dim = 6;
  return c;
}

PaddedIds Row(IdSequence ids) { return PaddedIds{1, ids.size(), std::move(ids)}; }

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(LstmCellTest, ZeroWeightsGiveZeroState) {
  const std::size_t h = 3;
  LstmWeights<double> w{TD::Zeros({2, 4 * h}), TD::Zeros({h, 4 * h}), TD::Zeros({4 * h})};
  LstmState<double> st{TD::Zeros({1, h}), TD::Zeros({1, h})};
  auto next = LstmCell(TD({1, 2}, {5.0, -7.0}), st, w);
  for (double v : next.hidden.data()) EXPECT_EQ(v, 0.0);
  for (double v : next.cell.data()) EXPECT_EQ(v, 0.0);
}

TEST(LstmCellTest, MatchesGateFormula) {
  Rng rng(1);
  const std::size_t h = 2;
  LstmWeights<double> w{RandomTensor({3, 8}, rng, -2, 2), RandomTensor({h, 8}, rng, -2, 2),
                        RandomTensor({8}, rng, -1, 1)};
  LstmState<double> st{RandomTensor({1, h}, rng), RandomTensor({1, h}, rng)};
  auto x = RandomTensor({1, 3}, rng);
  auto next = LstmCell(x, st, w);
  for (std::size_t u = 0; u < h; ++u) {
    double pre[4];
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t col = g * h + u;
      pre[g] = w.bias.at(col);
      for (std::size_t i = 0; i < 3; ++i) pre[g] += x.at(i) * w.w_ih.at(i * 8 + col);
      for (std::size_t i = 0; i < h; ++i) pre[g] += st.hidden.at(i) * w.w_hh.at(i * 8 + col);
    }
    const double ig = Sigmoid(pre[0]), fg = Sigmoid(pre[1]), gg = std::tanh(pre[2]), og = Sigmoid(pre[3]);
    for (double gate : {ig, fg, og}) {
      EXPECT_GT(gate, 0.0);
      EXPECT_LT(gate, 1.0);
    }
    const double c = fg * st.cell.at(u) + ig * gg;
    EXPECT_NEAR(next.cell.at(u), c, 1e-12);
    EXPECT_NEAR(next.hidden.at(u), og * std::tanh(c), 1e-12);
  }
}

TEST(LstmCellTest, GradientCheck) {
  Rng rng(2);
  LstmWeights<double> w{RandomTensor({3, 16}, rng), RandomTensor({4, 16}, rng), RandomTensor({16}, rng)};
  LstmState<double> st{RandomTensor({2, 4}, rng), RandomTensor({2, 4}, rng)};
  auto x = RandomTensor({2, 3}, rng);
  auto loss = [&] {
    auto n = LstmCell(x, st, w);
    return numcore::Add(Project(n.hidden, 5), Project(n.cell, 6));
  };
  auto r = CheckGradients({x, st.hidden, st.cell, w.w_ih, w.w_hh, w.bias}, loss);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(LstmCellTest, ForgetBiasStartsAtOne) {
  numcore::ParameterStore<float> store(1);
  auto w = DeclareLstm(store, "x", 3, 4);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(w.bias.at(i), (i >= 4 && i < 8) ? 1.0f : 0.0f);
}

TEST(LstmCellTest, BoundedOverManySteps) {
  numcore::ParameterStore<float> store(3);
  auto w = DeclareLstm(store, "x", 16, 32);
  LstmState<float> st{Tensor<float>::Zeros({1, 32}), Tensor<float>::Zeros({1, 32})};
  Rng rng(3);
  std::vector<float> xs(16);
  for (auto& v : xs) v = static_cast<float>(rng.Uniform(-1, 1));
  Tensor<float> x({1, 16}, xs);
  for (int step = 0; step < 1000; ++step) st = LstmCell(x, st, w);
  for (float v : st.cell.data()) {
    ASSERT_TRUE(std::isfinite(v));
    ASSERT_LT(std::abs(v), 1000.0f);
  }
  for (float v : st.hidden.data()) ASSERT_LE(std::abs(v), 1.0f);
}

TEST(LstmConfigTest, Defaults) {
  LstmConfig c;
  EXPECT_EQ(c.num_layers, 2u);
  EXPECT_EQ(c.hidden_dim, 512u);
  EXPECT_EQ(c.embedding_dim, 512u);
  EXPECT_EQ(LstmConfig::FromEntries(Tiny().ToEntries()).ToEntries(), Tiny().ToEntries());
}

TEST(EncoderTest, DefaultShape) {
  RecurrentModel<float> model(LstmConfig{}, 10, 10, 1);
  Rng rng(0);
  auto enc = model.Encode(Row({4, 5, 6}), Mode::kEval, rng);
  EXPECT_EQ(enc.states.shape(), (numcore::Shape{3, 1024}));
}

TEST(EncoderTest, EmptyInputThrows) {
  RecurrentModel<float> model(Tiny(), 10, 10, 1);
  Rng rng(0);
  EXPECT_THROW(model.Encode(PaddedIds{}, Mode::kEval, rng), DataError);
  EXPECT_THROW(model.Encode(PaddedIds{2, 1, {4, kPadId}}, Mode::kEval, rng), DataError);
}

TEST(EncoderTest, SingleTokenIsOneCellStep) {
  auto cfg = Tiny();
  cfg.num_layers = 1;
  RecurrentModel<double> model(cfg, 10, 10, 2);
  Rng rng(0);
  auto enc = model.Encode(Row({7}), Mode::kEval, rng);
  const auto& table = model.params().tensors()[0];
  TD x({1, 6}, std::vector<double>(table.data().begin() + 7 * 6, table.data().begin() + 8 * 6));
  LstmState<double> zero{TD::Zeros({1, 8}), TD::Zeros({1, 8})};
  auto fwd = LstmCell(x, zero, model.forward_weights()[0]);
  auto bwd = LstmCell(x, zero, model.backward_weights()[0]);
  for (std::size_t c = 0; c < 8; ++c) {
    EXPECT_NEAR(enc.states.at(c), fwd.hidden.at(c), 1e-12);
    EXPECT_NEAR(enc.states.at(8 + c), bwd.hidden.at(c), 1e-12);
  }
}

TEST(EncoderTest, ReversalSwapsDirectionsWithTiedWeights) {
  auto cfg = Tiny();
  cfg.num_layers = 1;
  RecurrentModel<double> model(cfg, 10, 10, 3);
  const auto& f = model.forward_weights()[0];
  auto b = model.backward_weights()[0];
  for (auto [src, dst] : {std::pair{f.w_ih, b.w_ih}, std::pair{f.w_hh, b.w_hh}, std::pair{f.bias, b.bias}}) {
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  }
  Rng rng(0);
  auto a = model.Encode(Row({4, 5, 6}), Mode::kEval, rng).states;
  auto r = model.Encode(Row({6, 5, 4}), Mode::kEval, rng).states;
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t c = 0; c < 8; ++c) {
      EXPECT_NEAR(a.at(t * 16 + c), r.at((2 - t) * 16 + 8 + c), 1e-12);
      EXPECT_NEAR(a.at(t * 16 + 8 + c), r.at((2 - t) * 16 + c), 1e-12);
    }
  }
}

TEST(EncoderTest, ForwardPrefixIsLengthCovariant) {
  // First layer only: upper layers read the backward half, which does change.
  auto cfg = Tiny();
  cfg.num_layers = 1;
  RecurrentModel<double> model(cfg, 10, 10, 4);
  Rng rng(0);
  auto a = model.Encode(Row({4, 5, 6}), Mode::kEval, rng).states;
  auto b = model.Encode(Row({4, 5, 6, 7, 8}), Mode::kEval, rng).states;
  for (std::size_t t = 0; t < 3; ++t) {
    for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(a.at(t * 16 + c), b.at(t * 16 + c), 1e-12);
  }
}

TEST(EncoderTest, PaddingDoesNotChangeRealPositions) {
  RecurrentModel<double> model(Tiny(), 10, 10, 5);
  Rng rng(0);
  auto plain = model.Encode(Row({4, 5, 6}), Mode::kEval, rng);
  auto padded = model.Encode(PaddedIds{2, 4, {4, 5, 6, kPadId, 7, 8, 9, 4}}, Mode::kEval, rng);
  for (std::size_t i = 0; i < 3 * 16; ++i) EXPECT_NEAR(plain.states.at(i), padded.states.at(i), 1e-12);
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t c = 0; c < 8; ++c) {
      EXPECT_NEAR(plain.forward_final[l].hidden.at(c), padded.forward_final[l].hidden.at(c), 1e-12);
      EXPECT_NEAR(plain.backward_final[l].cell.at(c), padded.backward_final[l].cell.at(c), 1e-12);
    }
  }
}

TEST(AttendDotTest, SingletonAndConvexity) {
  Rng rng(6);
  auto q = RandomTensor({1, 3}, rng, -1, 1, false);
  auto k1 = RandomTensor({1, 3}, rng, -1, 1, false);
  auto v1 = RandomTensor({1, 4}, rng, -1, 1, false);
  auto one = AttendDot(q, k1, v1, 1, {});
  EXPECT_EQ(one.weights.at(0), 1.0);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(one.context.at(c), v1.at(c));

  auto keys = RandomTensor({5, 3}, rng, -1, 1, false);
  TD same({5, 2}, {0.5, -2, 0.5, -2, 0.5, -2, 0.5, -2, 0.5, -2});
  auto avg = AttendDot(q, keys, same, 1, {});
  EXPECT_NEAR(avg.context.at(0), 0.5, 1e-12);
  EXPECT_NEAR(avg.context.at(1), -2.0, 1e-12);
}

TEST(AttendDotTest, MaskedWeights) {
  Rng rng(7);
  auto q = RandomTensor({2, 3}, rng, -1, 1, false);
  auto keys = RandomTensor({6, 3}, rng, -3, 3, false);
  auto values = RandomTensor({6, 2}, rng, -1, 1, false);
  const std::vector<bool> blocked = {false, false, true, false, true, true};
  auto r = AttendDot(q, keys, values, 2, blocked);
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_GE(r.weights.at(j), 0.0);
    s0 += r.weights.at(j);
    s1 += r.weights.at(3 + j);
  }
  EXPECT_NEAR(s0, 1.0, 1e-6);
  EXPECT_NEAR(s1, 1.0, 1e-6);
  EXPECT_EQ(r.weights.at(2), 0.0);
  EXPECT_EQ(r.weights.at(4), 0.0);
  EXPECT_EQ(r.weights.at(5), 0.0);
  EXPECT_THROW(AttendDot(q, keys, values, 2, {false, false, false, true, true, true}), DataError);
}

TEST(DecoderTest, StepIsStateful) {
  RecurrentModel<double> model(Tiny(), 10, 12, 8);
  Rng rng(0);
  auto enc = model.Encode(Row({4, 5, 6}), Mode::kEval, rng);
  auto keys = model.AttentionKeys(enc);
  auto s0 = model.InitialState(enc, 1);
  const IdSequence tok = {7};
  auto a = model.DecoderStep(s0, tok, enc, keys, {}, Mode::kEval, rng);
  auto b = model.DecoderStep(a.state, tok, enc, keys, {}, Mode::kEval, rng);
  EXPECT_EQ(a.logits.shape(), (numcore::Shape{1, 12}));
  bool differs = false;
  for (std::size_t c = 0; c < 12; ++c) differs = differs || a.logits.at(c) != b.logits.at(c);
  EXPECT_TRUE(differs);
  bool moved = false;
  for (std::size_t c = 0; c < 8; ++c) moved = moved || a.state.layers[1].hidden.at(c) != s0.layers[1].hidden.at(c);
  EXPECT_TRUE(moved);
}

TEST(DecoderTest, TeacherForcingEqualsStepwiseExactly) {
  RecurrentModel<float> model(Tiny(), 10, 12, 9);
  Rng rng(0);
  SentencePair pair{{4, 5, 6, 7}, {8, 9, 10, 11}};
  auto batch = MakeBatch({pair}, {0});
  auto logits = model.Logits(batch, Mode::kEval, rng);
  auto session = model.StartSession(pair.src);
  for (std::size_t j = 0; j < batch.tgt_in.len; ++j) {
    auto lp = session->Advance(batch.tgt_in.at(0, j));
    auto ref = numcore::LogSoftmaxRow<float>(logits.data().subspan(j * 12, 12));
    for (std::size_t c = 0; c < 12; ++c) ASSERT_EQ(lp[c], ref[c]) << "step " << j;
  }
}

TEST(RecurrentModelTest, BatchedLogitsMatchSingleSentence) {
  RecurrentModel<double> model(Tiny(), 12, 12, 10);
  Rng rng(0);
  std::vector<SentencePair> pairs = {{{4, 5, 6}, {7, 8}}, {{9}, {10, 11, 4, 5}}};
  auto batch = MakeBatch(pairs, {0, 1});
  auto logits = model.Logits(batch, Mode::kEval, rng);
  for (std::size_t b = 0; b < 2; ++b) {
    auto single = MakeBatch({pairs[b]}, {b});
    auto ref = model.Logits(single, Mode::kEval, rng);
    for (std::size_t j = 0; j < single.tgt_in.len; ++j) {
      for (std::size_t c = 0; c < 12; ++c) {
        ASSERT_NEAR(logits.at((b * batch.tgt_in.len + j) * 12 + c), ref.at(j * 12 + c), 1e-9);
      }
    }
  }
}

TEST(RecurrentModelTest, FullModelGradientCheck) {
  auto cfg = Tiny();
  cfg.embedding_dim = 8;
  RecurrentModel<double> model(cfg, 7, 8, 11);
  std::vector<SentencePair> pairs = {{{4, 5, 6}, {4, 7}}, {{6, 5}, {5}}};
  auto batch = MakeBatch(pairs, {0, 1});
  auto loss = [&] {
    Rng rng(321);
    auto logits = model.Logits(batch, Mode::kTrain, rng);
    return numcore::CrossEntropyLabelSmoothed(logits, batch.tgt_out.ids, 0.0, kPadId);
  };
  auto r = CheckGradients(model.params().tensors(), loss);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
  EXPECT_GT(r.checked, 1000u);
}

}  // namespace
}  // namespace charnmt::recurrent

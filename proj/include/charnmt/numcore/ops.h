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

#ifndef CHARNMT_NUMCORE_OPS_H_
#define CHARNMT_NUMCORE_OPS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "charnmt/common/types.h"
#include "charnmt/numcore/rng.h"
#include "charnmt/numcore/tensor.h"

namespace charnmt::numcore {

// a·b for rank-2 operands; either side may be used transposed.
template <typename T>
Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false,
                 bool transpose_b = false);

enum class ElementwiseKind { kAdd, kSub, kMul, kTanh, kSigmoid, kRelu, kScale };

// Generic dispatcher over the pointwise kinds. Binary kinds take two
// operands of equal shape, unary kinds one; kScale multiplies by `constant`.
template <typename T>
Tensor<T> Elementwise(ElementwiseKind kind, std::span<const Tensor<T>> operands, T constant = T(1));

template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> Scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> Tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> Sigmoid(const Tensor<T>& x);
template <typename T>
Tensor<T> Relu(const Tensor<T>& x);

// x [m×n] + bias [n] broadcast over rows.
template <typename T>
Tensor<T> AddRowBias(const Tensor<T>& x, const Tensor<T>& bias);

// Max-subtracted softmax over one axis of an arbitrary-rank tensor.
template <typename T>
Tensor<T> Softmax(const Tensor<T>& x, std::size_t axis);

// Row softmax of x [m×n] that ignores cells where blocked[r*n+c] is true.
// Blocked cells are exactly 0; a fully blocked row is all zeros.
template <typename T>
Tensor<T> MaskedSoftmaxRows(const Tensor<T>& x, const std::vector<bool>& blocked);

// Normalizes over the last dimension, then applies gain and bias.
template <typename T>
Tensor<T> LayerNorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps);

// Row gather; the backward pass scatter-adds into the selected rows.
template <typename T>
Tensor<T> GatherRows(const Tensor<T>& table, std::span<const std::size_t> rows);
template <typename T>
Tensor<T> EmbeddingLookup(const Tensor<T>& table, std::span<const TokenId> ids);

template <typename T>
Tensor<T> ConcatCols(const std::vector<Tensor<T>>& parts);
template <typename T>
Tensor<T> SliceCols(const Tensor<T>& x, std::size_t begin, std::size_t count);
template <typename T>
Tensor<T> ConcatRows(const std::vector<Tensor<T>>& parts);

template <typename T>
Tensor<T> Sum(const Tensor<T>& x);
template <typename T>
Tensor<T> Mean(const Tensor<T>& x);

// Mean over non-pad rows of KL(q || softmax(logits)), where q puts
// 1 - smoothing on the gold id and smoothing / (V - 1) on every other id.
// With smoothing = 0 this is the plain token cross-entropy.
template <typename T>
Tensor<T> CrossEntropyLabelSmoothed(const Tensor<T>& logits, std::span<const TokenId> targets,
                                    double smoothing, TokenId pad_id);

// Unsmoothed teacher-forced token statistics (no gradient).
struct TokenScore {
  double nll_sum = 0.0;
  std::size_t tokens = 0;
  std::size_t correct = 0;
};
template <typename T>
TokenScore ScoreTokens(const Tensor<T>& logits, std::span<const TokenId> targets, TokenId pad_id);

// log(softmax(row)) evaluated in double precision.
template <typename T>
std::vector<double> LogSoftmaxRow(std::span<const T> row);

// Inverted-dropout mask: 0 with probability `rate`, else 1/(1-rate).
// All ones in evaluation mode.
template <typename T>
Tensor<T> DropoutMask(const Shape& shape, double rate, Rng& rng, Mode mode);
template <typename T>
Tensor<T> Dropout(const Tensor<T>& x, double rate, Rng& rng, Mode mode);
// Drops whole rows of x [m×n] (token-level dropout of embeddings).
template <typename T>
Tensor<T> RowDropout(const Tensor<T>& x, double rate, Rng& rng, Mode mode);

// Pointwise LSTM update from preactivations gates [B×4H] laid out as
// (input, forget, candidate, output). Returns [B×2H] = [h' | c']. Rows with
// active[r] == false copy (h_prev, c_prev) through unchanged.
template <typename T>
Tensor<T> LstmPointwise(const Tensor<T>& gates, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                        const std::vector<bool>& active = {});

// Layout of a batch of independent attention problems packed row-wise:
// q [batch*query_len × heads*dk], k [batch*key_len × heads*dk],
// v [batch*key_len × heads*dv].
struct AttentionLayout {
  std::size_t batch = 1;
  std::size_t query_len = 0;
  std::size_t key_len = 0;
  std::size_t heads = 1;
  double scale = 1.0;
  std::vector<bool> key_blocked;  // batch*key_len, true = never attended
  bool causal = false;            // query i may see keys j <= i
};

template <typename T>
struct AttentionResult {
  Tensor<T> values;   // [batch*query_len × heads*dv]
  Tensor<T> weights;  // [batch × heads × query_len × key_len], no gradient
};

template <typename T>
AttentionResult<T> BatchedAttention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                    const AttentionLayout& layout);

// Runs the active tape backward from a scalar loss.
template <typename T>
void Backward(const Tensor<T>& loss);

// Rescales the gradients of `params` so their joint L2 norm is at most
// max_norm. Returns the norm before clipping.
template <typename T>
double ClipGradNorm(std::span<Tensor<T>> params, double max_norm);

}  // namespace charnmt::numcore

#endif  // CHARNMT_NUMCORE_OPS_H_

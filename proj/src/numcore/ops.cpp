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

#include "charnmt/numcore/ops.h"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "charnmt/common/error.h"

namespace charnmt::numcore {
namespace {

template <typename T>
void Gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
          const T* b, std::size_t ldb, T beta, T* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (beta == T(0)) std::fill(c, c + m * ldc, T(0));
    return;
  }
  const auto op_a = ta ? CblasTrans : CblasNoTrans;
  const auto op_b = tb ? CblasTrans : CblasNoTrans;
  if constexpr (std::is_same_v<T, float>) {
    cblas_sgemm(CblasRowMajor, op_a, op_b, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k),
                1.0f, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
  } else {
    cblas_dgemm(CblasRowMajor, op_a, op_b, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k),
                1.0, a, static_cast<int>(lda), b, static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
  }
}

template <typename T>
void RequireRank2(const Tensor<T>& x, const char* what) {
  if (!x.defined() || x.rank() != 2) {
    throw DimensionError(std::string(what) + " expects a rank-2 tensor, got " +
                         (x.defined() ? ShapeToString(x.shape()) : std::string("<undefined>")));
  }
}

template <typename T>
void RequireSameShape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + ShapeToString(a.shape()) + " vs " +
                         ShapeToString(b.shape()));
  }
}

template <typename T>
void AccumulateInto(const Tensor<T>& target, const std::vector<T>& values) {
  auto& g = target.node().GradBuffer();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += values[i];
}

template <typename T, typename Fn, typename Deriv>
Tensor<T> UnaryOp(const Tensor<T>& x, Fn fn, Deriv deriv_from_output) {
  std::vector<T> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  return MakeResult<T>(x.shape(), std::move(out), {&x}, [x, deriv_from_output](const Node<T>& self) {
    if (!WantsGrad(x)) return;
    auto& g = x.node().GradBuffer();
    auto xin = x.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * deriv_from_output(xin[i], self.data[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> MatMul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a, bool transpose_b) {
  RequireRank2(a, "matmul");
  RequireRank2(b, "matmul");
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t ka = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (ka != kb) {
    throw DimensionError("matmul: inner dimensions disagree for " + ShapeToString(a.shape()) +
                         (transpose_a ? "^T" : "") + " x " + ShapeToString(b.shape()) + (transpose_b ? "^T" : ""));
  }
  std::vector<T> out(m * n, T(0));
  Gemm<T>(transpose_a, transpose_b, m, n, ka, a.data().data(), a.cols(), b.data().data(), b.cols(), T(0),
          out.data(), n);
  return MakeResult<T>({m, n}, std::move(out), {&a, &b},
                       [a, b, transpose_a, transpose_b, m, n, ka](const Node<T>& self) {
                         const T* dc = self.grad.data();
                         if (WantsGrad(a)) {
                           T* da = a.node().GradBuffer().data();
                           if (!transpose_a) {
                             // dA = dC · op(B)^T
                             Gemm<T>(false, !transpose_b, m, ka, n, dc, n, b.data().data(), b.cols(), T(1), da,
                                     a.cols());
                           } else {
                             // dA = op(B) · dC^T
                             Gemm<T>(transpose_b, true, ka, m, n, b.data().data(), b.cols(), dc, n, T(1), da,
                                     a.cols());
                           }
                         }
                         if (WantsGrad(b)) {
                           T* db = b.node().GradBuffer().data();
                           if (!transpose_b) {
                             // dB = op(A)^T · dC
                             Gemm<T>(!transpose_a, false, ka, n, m, a.data().data(), a.cols(), dc, n, T(1), db,
                                     b.cols());
                           } else {
                             // dB = dC^T · op(A)
                             Gemm<T>(true, transpose_a, n, ka, m, dc, n, a.data().data(), a.cols(), T(1), db,
                                     b.cols());
                           }
                         }
                       });
}

template <typename T>
Tensor<T> Add(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return MakeResult<T>(a.shape(), std::move(out), {&a, &b}, [a, b](const Node<T>& self) {
    if (WantsGrad(a)) AccumulateInto(a, self.grad);
    if (WantsGrad(b)) AccumulateInto(b, self.grad);
  });
}

template <typename T>
Tensor<T> Sub(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return MakeResult<T>(a.shape(), std::move(out), {&a, &b}, [a, b](const Node<T>& self) {
    if (WantsGrad(a)) AccumulateInto(a, self.grad);
    if (WantsGrad(b)) {
      auto& g = b.node().GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> Mul(const Tensor<T>& a, const Tensor<T>& b) {
  RequireSameShape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return MakeResult<T>(a.shape(), std::move(out), {&a, &b}, [a, b](const Node<T>& self) {
    if (WantsGrad(a)) {
      auto& g = a.node().GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b.data()[i];
    }
    if (WantsGrad(b)) {
      auto& g = b.node().GradBuffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a.data()[i];
    }
  });
}

template <typename T>
Tensor<T> Scale(const Tensor<T>& x, T factor) {
  return UnaryOp<T>(x, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> Tanh(const Tensor<T>& x) {
  return UnaryOp<T>(x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> Sigmoid(const Tensor<T>& x) {
  return UnaryOp<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> Relu(const Tensor<T>& x) {
  return UnaryOp<T>(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> Elementwise(ElementwiseKind kind, std::span<const Tensor<T>> operands, T constant) {
  const bool binary = kind == ElementwiseKind::kAdd || kind == ElementwiseKind::kSub || kind == ElementwiseKind::kMul;
  const std::size_t want = binary ? 2 : 1;
  if (operands.size() != want) {
    throw DimensionError("elementwise: expected " + std::to_string(want) + " operands, got " +
                         std::to_string(operands.size()));
  }
  switch (kind) {
    case ElementwiseKind::kAdd:
      return Add(operands[0], operands[1]);
    case ElementwiseKind::kSub:
      return Sub(operands[0], operands[1]);
    case ElementwiseKind::kMul:
      return Mul(operands[0], operands[1]);
    case ElementwiseKind::kTanh:
      return Tanh(operands[0]);
    case ElementwiseKind::kSigmoid:
      return Sigmoid(operands[0]);
    case ElementwiseKind::kRelu:
      return Relu(operands[0]);
    case ElementwiseKind::kScale:
      return Scale(operands[0], constant);
  }
  throw ParameterError("elementwise: unknown kind");
}

template <typename T>
Tensor<T> AddRowBias(const Tensor<T>& x, const Tensor<T>& bias) {
  RequireRank2(x, "add_row_bias");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (bias.size() != n) {
    throw DimensionError("add_row_bias: bias " + ShapeToString(bias.shape()) + " does not match rows of " +
                         ShapeToString(x.shape()));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  }
  return MakeResult<T>(x.shape(), std::move(out), {&x, &bias}, [x, bias, m, n](const Node<T>& self) {
    if (WantsGrad(x)) AccumulateInto(x, self.grad);
    if (WantsGrad(bias)) {
      auto& g = bias.node().GradBuffer();
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) g[c] += self.grad[r * n + c];
      }
    }
  });
}

template <typename T>
Tensor<T> Softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " + ShapeToString(x.shape()));
  }
  const Shape& shape = x.shape();
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const std::size_t n = shape[axis];
  std::vector<T> out(x.size());
  auto in = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t s = 0; s < inner; ++s) {
      const std::size_t base = o * n * inner + s;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, static_cast<double>(in[base + j * inner]));
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += std::exp(static_cast<double>(in[base + j * inner]) - mx);
      for (std::size_t j = 0; j < n; ++j) {
        out[base + j * inner] = static_cast<T>(std::exp(static_cast<double>(in[base + j * inner]) - mx) / total);
      }
    }
  }
  return MakeResult<T>(x.shape(), std::move(out), {&x}, [x, outer, inner, n](const Node<T>& self) {
    if (!WantsGrad(x)) return;
    auto& g = x.node().GradBuffer();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t s = 0; s < inner; ++s) {
        const std::size_t base = o * n * inner + s;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          dot += static_cast<double>(self.data[base + j * inner]) * self.grad[base + j * inner];
        }
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          g[idx] += static_cast<T>(self.data[idx] * (self.grad[idx] - dot));
        }
      }
    }
  });
}

template <typename T>
Tensor<T> MaskedSoftmaxRows(const Tensor<T>& x, const std::vector<bool>& blocked) {
  RequireRank2(x, "masked_softmax");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (blocked.size() != m * n) {
    throw DimensionError("masked_softmax: mask has " + std::to_string(blocked.size()) + " cells for " +
                         ShapeToString(x.shape()));
  }
  std::vector<T> out(m * n, T(0));
  auto in = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (!blocked[r * n + c]) mx = std::max(mx, static_cast<double>(in[r * n + c]));
    }
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!blocked[r * n + c]) total += std::exp(static_cast<double>(in[r * n + c]) - mx);
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!blocked[r * n + c]) out[r * n + c] = static_cast<T>(std::exp(static_cast<double>(in[r * n + c]) - mx) / total);
    }
  }
  return MakeResult<T>(x.shape(), std::move(out), {&x}, [x, m, n](const Node<T>& self) {
    if (!WantsGrad(x)) return;
    auto& g = x.node().GradBuffer();
    for (std::size_t r = 0; r < m; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += static_cast<double>(self.data[r * n + c]) * self.grad[r * n + c];
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t idx = r * n + c;
        g[idx] += static_cast<T>(self.data[idx] * (self.grad[idx] - dot));
      }
    }
  });
}

template <typename T>
Tensor<T> LayerNorm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: rank-0 input");
  const std::size_t n = x.shape().back();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain " + ShapeToString(gain.shape()) + " / bias " +
                         ShapeToString(bias.shape()) + " do not match last dimension of " + ShapeToString(x.shape()));
  }
  const std::size_t rows = n == 0 ? 0 : x.size() / n;
  std::vector<T> out(x.size());
  std::vector<T> xhat(x.size());
  std::vector<T> inv_std(rows);
  auto in = x.data();
  auto gn = gain.data();
  auto bs = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = in.data() + r * n;
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += row[c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    inv_std[r] = static_cast<T>(inv);
    for (std::size_t c = 0; c < n; ++c) {
      const T h = static_cast<T>((row[c] - mean) * inv);
      xhat[r * n + c] = h;
      out[r * n + c] = gn[c] * h + bs[c];
    }
  }
  return MakeResult<T>(x.shape(), std::move(out), {&x, &gain, &bias},
                       [x, gain, bias, n, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Node<T>& self) {
                         const T* dy = self.grad.data();
                         if (WantsGrad(gain) || WantsGrad(bias)) {
                           T* dg = WantsGrad(gain) ? gain.node().GradBuffer().data() : nullptr;
                           T* db = WantsGrad(bias) ? bias.node().GradBuffer().data() : nullptr;
                           for (std::size_t r = 0; r < rows; ++r) {
                             for (std::size_t c = 0; c < n; ++c) {
                               if (dg) dg[c] += dy[r * n + c] * xhat[r * n + c];
                               if (db) db[c] += dy[r * n + c];
                             }
                           }
                         }
                         if (!WantsGrad(x)) return;
                         T* dx = x.node().GradBuffer().data();
                         auto gn = gain.data();
                         for (std::size_t r = 0; r < rows; ++r) {
                           double mean_d = 0.0;
                           double mean_dx = 0.0;
                           for (std::size_t c = 0; c < n; ++c) {
                             const double d = static_cast<double>(dy[r * n + c]) * gn[c];
                             mean_d += d;
                             mean_dx += d * xhat[r * n + c];
                           }
                           mean_d /= static_cast<double>(n);
                           mean_dx /= static_cast<double>(n);
                           for (std::size_t c = 0; c < n; ++c) {
                             const double d = static_cast<double>(dy[r * n + c]) * gn[c];
                             dx[r * n + c] += static_cast<T>(inv_std[r] * (d - mean_d - xhat[r * n + c] * mean_dx));
                           }
                         }
                       });
}

template <typename T>
Tensor<T> GatherRows(const Tensor<T>& table, std::span<const std::size_t> rows) {
  RequireRank2(table, "gather_rows");
  const std::size_t v = table.rows();
  const std::size_t d = table.cols();
  std::vector<T> out(rows.size() * d);
  auto src = table.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= v) {
      throw IndexError("row index " + std::to_string(rows[i]) + " out of range for table with " +
                       std::to_string(v) + " rows");
    }
    std::copy_n(src.data() + rows[i] * d, d, out.data() + i * d);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return MakeResult<T>({rows.size(), d}, std::move(out), {&table}, [table, d, idx = std::move(idx)](const Node<T>& self) {
    if (!WantsGrad(table)) return;
    auto& g = table.node().GradBuffer();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t c = 0; c < d; ++c) g[idx[i] * d + c] += self.grad[i * d + c];
    }
  });
}

template <typename T>
Tensor<T> EmbeddingLookup(const Tensor<T>& table, std::span<const TokenId> ids) {
  RequireRank2(table, "embedding_lookup");
  std::vector<std::size_t> rows(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      throw IndexError("embedding id " + std::to_string(ids[i]) + " out of range [0, " +
                       std::to_string(table.rows()) + ")");
    }
    rows[i] = static_cast<std::size_t>(ids[i]);
  }
  return GatherRows(table, std::span<const std::size_t>(rows));
}

template <typename T>
Tensor<T> ConcatCols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    RequireRank2(p, "concat_cols");
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row counts disagree, " + ShapeToString(parts[0].shape()) + " vs " +
                           ShapeToString(p.shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<T> out(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t r = 0; r < m; ++r) std::copy_n(p.data().data() + r * w, w, out.data() + r * total + offset);
    offset += w;
  }
  return MakeResult<T>({m, total}, std::move(out), parts, [parts, m, total](const Node<T>& self) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t w = p.cols();
      if (WantsGrad(p)) {
        auto& g = p.node().GradBuffer();
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < w; ++c) g[r * w + c] += self.grad[r * total + offset + c];
        }
      }
      offset += w;
    }
  });
}

template <typename T>
Tensor<T> SliceCols(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  RequireRank2(x, "slice_cols");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (begin + count > n) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") exceeds " + ShapeToString(x.shape()));
  }
  std::vector<T> out(m * count);
  for (std::size_t r = 0; r < m; ++r) std::copy_n(x.data().data() + r * n + begin, count, out.data() + r * count);
  return MakeResult<T>({m, count}, std::move(out), {&x}, [x, m, n, begin, count](const Node<T>& self) {
    if (!WantsGrad(x)) return;
    auto& g = x.node().GradBuffer();
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < count; ++c) g[r * n + begin + c] += self.grad[r * count + c];
    }
  });
}

template <typename T>
Tensor<T> ConcatRows(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no operands");
  const std::size_t n = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    RequireRank2(p, "concat_rows");
    if (p.cols() != n) {
      throw DimensionError("concat_rows: column counts disagree, " + ShapeToString(parts[0].shape()) + " vs " +
                           ShapeToString(p.shape()));
    }
    total += p.rows();
  }
  std::vector<T> out;
  out.reserve(total * n);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return MakeResult<T>({total, n}, std::move(out), parts, [parts](const Node<T>& self) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      if (WantsGrad(p)) {
        auto& g = p.node().GradBuffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += p.size();
    }
  });
}

template <typename T>
Tensor<T> Sum(const Tensor<T>& x) {
  double total = 0.0;
  for (T v : x.data()) total += v;
  return MakeResult<T>({1}, {static_cast<T>(total)}, {&x}, [x](const Node<T>& self) {
    if (!WantsGrad(x)) return;
    auto& g = x.node().GradBuffer();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> Mean(const Tensor<T>& x) {
  if (x.size() == 0) throw DimensionError("mean of empty tensor");
  return Scale(Sum(x), static_cast<T>(1.0 / static_cast<double>(x.size())));
}

template <typename T>
std::vector<double> LogSoftmaxRow(std::span<const T> row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (T v : row) mx = std::max(mx, static_cast<double>(v));
  double total = 0.0;
  for (T v : row) total += std::exp(static_cast<double>(v) - mx);
  const double log_z = mx + std::log(total);
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = static_cast<double>(row[i]) - log_z;
  return out;
}

template <typename T>
Tensor<T> CrossEntropyLabelSmoothed(const Tensor<T>& logits, std::span<const TokenId> targets, double smoothing,
                                    TokenId pad_id) {
  RequireRank2(logits, "cross_entropy");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ParameterError("label smoothing must lie in [0, 1), got " + std::to_string(smoothing));
  }
  const std::size_t rows = logits.rows();
  const std::size_t vocab = logits.cols();
  if (targets.size() != rows) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         ShapeToString(logits.shape()));
  }
  if (smoothing > 0.0 && vocab < 2) throw ParameterError("label smoothing needs at least 2 classes");
  const double q_gold = 1.0 - smoothing;
  const double q_other = vocab > 1 ? smoothing / static_cast<double>(vocab - 1) : 0.0;
  // sum_j q_j log q_j, with 0 log 0 = 0
  double entropy_term = 0.0;
  if (q_gold > 0.0) entropy_term += q_gold * std::log(q_gold);
  if (q_other > 0.0) entropy_term += static_cast<double>(vocab - 1) * q_other * std::log(q_other);

  std::size_t count = 0;
  for (TokenId t : targets) {
    if (t == pad_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw IndexError("target id " + std::to_string(t) + " out of range [0, " + std::to_string(vocab) + ")");
    }
    ++count;
  }
  if (count == 0) throw DataError("cross_entropy: every target position is padding");

  double total = 0.0;
  auto in = logits.data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] == pad_id) continue;
    const auto logp = LogSoftmaxRow<T>(in.subspan(r * vocab, vocab));
    double cross = 0.0;
    if (q_other > 0.0) {
      double sum_all = 0.0;
      for (double lp : logp) sum_all += lp;
      cross = q_other * (sum_all - logp[targets[r]]);
    }
    cross += q_gold * logp[targets[r]];
    total += entropy_term - cross;
  }
  const double loss = total / static_cast<double>(count);
  std::vector<TokenId> tgt(targets.begin(), targets.end());
  return MakeResult<T>(
      {1}, {static_cast<T>(loss)}, {&logits},
      [logits, tgt = std::move(tgt), rows, vocab, q_gold, q_other, count, pad_id](const Node<T>& self) {
        if (!WantsGrad(logits)) return;
        auto& g = logits.node().GradBuffer();
        const double upstream = static_cast<double>(self.grad[0]) / static_cast<double>(count);
        auto in = logits.data();
        for (std::size_t r = 0; r < rows; ++r) {
          if (tgt[r] == pad_id) continue;
          const auto logp = LogSoftmaxRow<T>(in.subspan(r * vocab, vocab));
          for (std::size_t c = 0; c < vocab; ++c) {
            const double q = static_cast<TokenId>(c) == tgt[r] ? q_gold : q_other;
            g[r * vocab + c] += static_cast<T>(upstream * (std::exp(logp[c]) - q));
          }
        }
      });
}

template <typename T>
TokenScore ScoreTokens(const Tensor<T>& logits, std::span<const TokenId> targets, TokenId pad_id) {
  RequireRank2(logits, "score_tokens");
  const std::size_t vocab = logits.cols();
  if (targets.size() != logits.rows()) {
    throw DimensionError("score_tokens: " + std::to_string(targets.size()) + " targets for logits " +
                         ShapeToString(logits.shape()));
  }
  TokenScore score;
  auto in = logits.data();
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] == pad_id) continue;
    auto row = in.subspan(r * vocab, vocab);
    const auto logp = LogSoftmaxRow<T>(row);
    score.nll_sum -= logp[targets[r]];
    ++score.tokens;
    // first maximum = lowest id on ties
    const auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == targets[r]) ++score.correct;
  }
  return score;
}

template <typename T>
Tensor<T> DropoutMask(const Shape& shape, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::kEval || rate == 0.0) return Tensor<T>::Filled(shape, T(1));
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(NumElements(shape));
  for (auto& m : mask) m = rng.Uniform() < rate ? T(0) : keep;
  return Tensor<T>(shape, std::move(mask));
}

template <typename T>
Tensor<T> Dropout(const Tensor<T>& x, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::kEval || rate == 0.0) return x;
  return Mul(x, DropoutMask<T>(x.shape(), rate, rng, mode));
}

template <typename T>
Tensor<T> RowDropout(const Tensor<T>& x, double rate, Rng& rng, Mode mode) {
  RequireRank2(x, "row_dropout");
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::kEval || rate == 0.0) return x;
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size());
  const std::size_t n = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T value = rng.Uniform() < rate ? T(0) : keep;
    std::fill_n(mask.begin() + r * n, n, value);
  }
  return Mul(x, Tensor<T>(x.shape(), std::move(mask)));
}

template <typename T>
Tensor<T> LstmPointwise(const Tensor<T>& gates, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                        const std::vector<bool>& active) {
  RequireRank2(gates, "lstm_pointwise");
  RequireRank2(h_prev, "lstm_pointwise");
  RequireRank2(c_prev, "lstm_pointwise");
  const std::size_t b = gates.rows();
  const std::size_t h = c_prev.cols();
  if (gates.cols() != 4 * h || c_prev.rows() != b || h_prev.rows() != b || h_prev.cols() != h) {
    throw DimensionError("lstm_pointwise: gates " + ShapeToString(gates.shape()) + ", hidden " +
                         ShapeToString(h_prev.shape()) + ", cell " + ShapeToString(c_prev.shape()));
  }
  if (!active.empty() && active.size() != b) throw DimensionError("lstm_pointwise: active mask size");
  std::vector<T> out(b * 2 * h);
  // saved activations: i, f, g, o, tanh(c')
  std::vector<T> saved(b * 5 * h);
  auto a = gates.data();
  auto cp = c_prev.data();
  auto hp = h_prev.data();
  for (std::size_t r = 0; r < b; ++r) {
    const bool on = active.empty() || active[r];
    for (std::size_t j = 0; j < h; ++j) {
      if (!on) {
        out[r * 2 * h + j] = hp[r * h + j];
        out[r * 2 * h + h + j] = cp[r * h + j];
        continue;
      }
      const T* row = a.data() + r * 4 * h;
      const T ig = T(1) / (T(1) + std::exp(-row[j]));
      const T fg = T(1) / (T(1) + std::exp(-row[h + j]));
      const T gg = std::tanh(row[2 * h + j]);
      const T og = T(1) / (T(1) + std::exp(-row[3 * h + j]));
      const T c = fg * cp[r * h + j] + ig * gg;
      const T tc = std::tanh(c);
      out[r * 2 * h + j] = og * tc;
      out[r * 2 * h + h + j] = c;
      T* s = saved.data() + r * 5 * h;
      s[j] = ig;
      s[h + j] = fg;
      s[2 * h + j] = gg;
      s[3 * h + j] = og;
      s[4 * h + j] = tc;
    }
  }
  return MakeResult<T>(
      {b, 2 * h}, std::move(out), {&gates, &h_prev, &c_prev},
      [gates, h_prev, c_prev, active, b, h, saved = std::move(saved)](const Node<T>& self) {
        T* dgates = WantsGrad(gates) ? gates.node().GradBuffer().data() : nullptr;
        T* dh = WantsGrad(h_prev) ? h_prev.node().GradBuffer().data() : nullptr;
        T* dc = WantsGrad(c_prev) ? c_prev.node().GradBuffer().data() : nullptr;
        auto cp = c_prev.data();
        for (std::size_t r = 0; r < b; ++r) {
          const bool on = active.empty() || active[r];
          const T* g_out = self.grad.data() + r * 2 * h;
          for (std::size_t j = 0; j < h; ++j) {
            const T dh_new = g_out[j];
            const T dc_new = g_out[h + j];
            if (!on) {
              if (dh) dh[r * h + j] += dh_new;
              if (dc) dc[r * h + j] += dc_new;
              continue;
            }
            const T* s = saved.data() + r * 5 * h;
            const T ig = s[j], fg = s[h + j], gg = s[2 * h + j], og = s[3 * h + j], tc = s[4 * h + j];
            const T dctot = dc_new + dh_new * og * (T(1) - tc * tc);
            if (dc) dc[r * h + j] += dctot * fg;
            if (dgates) {
              T* row = dgates + r * 4 * h;
              row[j] += dctot * gg * ig * (T(1) - ig);
              row[h + j] += dctot * cp[r * h + j] * fg * (T(1) - fg);
              row[2 * h + j] += dctot * ig * (T(1) - gg * gg);
              row[3 * h + j] += dh_new * tc * og * (T(1) - og);
            }
          }
        }
      });
}

template <typename T>
AttentionResult<T> BatchedAttention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                    const AttentionLayout& layout) {
  RequireRank2(q, "attention");
  RequireRank2(k, "attention");
  RequireRank2(v, "attention");
  const std::size_t nb = layout.batch, lq = layout.query_len, lk = layout.key_len, nh = layout.heads;
  if (nh == 0 || q.cols() % nh != 0 || v.cols() % nh != 0) {
    throw DimensionError("attention: widths " + ShapeToString(q.shape()) + " / " + ShapeToString(v.shape()) +
                         " not divisible by " + std::to_string(nh) + " heads");
  }
  const std::size_t dk = q.cols() / nh;
  const std::size_t dv = v.cols() / nh;
  if (q.rows() != nb * lq || k.rows() != nb * lk || v.rows() != nb * lk || k.cols() != q.cols()) {
    throw DimensionError("attention: q " + ShapeToString(q.shape()) + ", k " + ShapeToString(k.shape()) + ", v " +
                         ShapeToString(v.shape()) + " inconsistent with batch " + std::to_string(nb) + " x (" +
                         std::to_string(lq) + ", " + std::to_string(lk) + ")");
  }
  if (!layout.key_blocked.empty() && layout.key_blocked.size() != nb * lk) {
    throw DimensionError("attention: key mask has " + std::to_string(layout.key_blocked.size()) +
                         " cells, expected " + std::to_string(nb * lk));
  }
  if (layout.causal && lq != lk) throw DimensionError("attention: causal mask needs square attention");

  const std::size_t qw = nh * dk;
  const std::size_t vw = nh * dv;
  const T scale = static_cast<T>(layout.scale);
  std::vector<T> out(nb * lq * vw, T(0));
  std::vector<T> weights(nb * nh * lq * lk, T(0));
  auto qd = q.data();
  auto kd = k.data();
  auto vd = v.data();
  auto blocked = [&layout, lk](std::size_t b, std::size_t i, std::size_t j) {
    if (!layout.key_blocked.empty() && layout.key_blocked[b * lk + j]) return true;
    return layout.causal && j > i;
  };
  std::vector<double> scores(lk);
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t hd = 0; hd < nh; ++hd) {
      for (std::size_t i = 0; i < lq; ++i) {
        const T* qi = qd.data() + (b * lq + i) * qw + hd * dk;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lk; ++j) {
          if (blocked(b, i, j)) continue;
          const T* kj = kd.data() + (b * lk + j) * qw + hd * dk;
          T dot = T(0);
          for (std::size_t c = 0; c < dk; ++c) dot += qi[c] * kj[c];
          scores[j] = static_cast<double>(dot * scale);
          mx = std::max(mx, scores[j]);
        }
        if (mx == -std::numeric_limits<double>::infinity()) continue;
        double total = 0.0;
        for (std::size_t j = 0; j < lk; ++j) {
          if (!blocked(b, i, j)) total += std::exp(scores[j] - mx);
        }
        T* w = weights.data() + ((b * nh + hd) * lq + i) * lk;
        T* o = out.data() + (b * lq + i) * vw + hd * dv;
        for (std::size_t j = 0; j < lk; ++j) {
          if (blocked(b, i, j)) continue;
          w[j] = static_cast<T>(std::exp(scores[j] - mx) / total);
          const T* vj = vd.data() + (b * lk + j) * vw + hd * dv;
          for (std::size_t c = 0; c < dv; ++c) o[c] += w[j] * vj[c];
        }
      }
    }
  }
  Tensor<T> weight_tensor({nb, nh, lq, lk}, weights);
  Tensor<T> values = MakeResult<T>(
      {nb * lq, vw}, std::move(out), {&q, &k, &v},
      [q, k, v, nb, lq, lk, nh, dk, dv, qw, vw, scale, weights = std::move(weights)](const Node<T>& self) {
        T* dq = WantsGrad(q) ? q.node().GradBuffer().data() : nullptr;
        T* dkey = WantsGrad(k) ? k.node().GradBuffer().data() : nullptr;
        T* dval = WantsGrad(v) ? v.node().GradBuffer().data() : nullptr;
        auto qd = q.data();
        auto kd = k.data();
        auto vd = v.data();
        std::vector<T> dw(lk);
        for (std::size_t b = 0; b < nb; ++b) {
          for (std::size_t hd = 0; hd < nh; ++hd) {
            for (std::size_t i = 0; i < lq; ++i) {
              const T* w = weights.data() + ((b * nh + hd) * lq + i) * lk;
              const T* go = self.grad.data() + (b * lq + i) * vw + hd * dv;
              double s = 0.0;
              for (std::size_t j = 0; j < lk; ++j) {
                if (w[j] == T(0)) {
                  dw[j] = T(0);
                  continue;
                }
                const T* vj = vd.data() + (b * lk + j) * vw + hd * dv;
                T dot = T(0);
                for (std::size_t c = 0; c < dv; ++c) dot += go[c] * vj[c];
                dw[j] = dot;
                s += static_cast<double>(w[j]) * dot;
                if (dval) {
                  T* dvj = dval + (b * lk + j) * vw + hd * dv;
                  for (std::size_t c = 0; c < dv; ++c) dvj[c] += w[j] * go[c];
                }
              }
              const T* qi = qd.data() + (b * lq + i) * qw + hd * dk;
              T* dqi = dq ? dq + (b * lq + i) * qw + hd * dk : nullptr;
              for (std::size_t j = 0; j < lk; ++j) {
                if (w[j] == T(0)) continue;
                const T ds = static_cast<T>(w[j] * (dw[j] - s)) * scale;
                const T* kj = kd.data() + (b * lk + j) * qw + hd * dk;
                if (dqi) {
                  for (std::size_t c = 0; c < dk; ++c) dqi[c] += ds * kj[c];
                }
                if (dkey) {
                  T* dkj = dkey + (b * lk + j) * qw + hd * dk;
                  for (std::size_t c = 0; c < dk; ++c) dkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
  return {values, weight_tensor};
}

template <typename T>
void Backward(const Tensor<T>& loss) {
  Tape<T>* tape = Tape<T>::Active();
  if (tape == nullptr) throw TapeError("backward called without an active tape");
  tape->Backward(loss);
}

template <typename T>
double ClipGradNorm(std::span<Tensor<T>> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (T g : p.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

#define CHARNMT_INSTANTIATE_OPS(T)                                                                       \
  template Tensor<T> MatMul(const Tensor<T>&, const Tensor<T>&, bool, bool);                             \
  template Tensor<T> Elementwise(ElementwiseKind, std::span<const Tensor<T>>, T);                        \
  template Tensor<T> Add(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> Sub(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> Mul(const Tensor<T>&, const Tensor<T>&);                                            \
  template Tensor<T> Scale(const Tensor<T>&, T);                                                         \
  template Tensor<T> Tanh(const Tensor<T>&);                                                             \
  template Tensor<T> Sigmoid(const Tensor<T>&);                                                          \
  template Tensor<T> Relu(const Tensor<T>&);                                                             \
  template Tensor<T> AddRowBias(const Tensor<T>&, const Tensor<T>&);                                     \
  template Tensor<T> Softmax(const Tensor<T>&, std::size_t);                                             \
  template Tensor<T> MaskedSoftmaxRows(const Tensor<T>&, const std::vector<bool>&);                      \
  template Tensor<T> LayerNorm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                 \
  template Tensor<T> GatherRows(const Tensor<T>&, std::span<const std::size_t>);                         \
  template Tensor<T> EmbeddingLookup(const Tensor<T>&, std::span<const TokenId>);                        \
  template Tensor<T> ConcatCols(const std::vector<Tensor<T>>&);                                          \
  template Tensor<T> SliceCols(const Tensor<T>&, std::size_t, std::size_t);                              \
  template Tensor<T> ConcatRows(const std::vector<Tensor<T>>&);                                          \
  template Tensor<T> Sum(const Tensor<T>&);                                                              \
  template Tensor<T> Mean(const Tensor<T>&);                                                             \
  template Tensor<T> CrossEntropyLabelSmoothed(const Tensor<T>&, std::span<const TokenId>, double, TokenId); \
  template TokenScore ScoreTokens(const Tensor<T>&, std::span<const TokenId>, TokenId);                  \
  template std::vector<double> LogSoftmaxRow(std::span<const T>);                                       \
  template Tensor<T> DropoutMask<T>(const Shape&, double, Rng&, Mode);                                   \
  template Tensor<T> Dropout(const Tensor<T>&, double, Rng&, Mode);                                      \
  template Tensor<T> RowDropout(const Tensor<T>&, double, Rng&, Mode);                                   \
  template Tensor<T> LstmPointwise(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                                   const std::vector<bool>&);                                            \
  template AttentionResult<T> BatchedAttention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                               const AttentionLayout&);                                  \
  template void Backward(const Tensor<T>&);                                                              \
  template double ClipGradNorm(std::span<Tensor<T>>, double);

CHARNMT_INSTANTIATE_OPS(float)
CHARNMT_INSTANTIATE_OPS(double)

}  // namespace charnmt::numcore

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

#include "charnmt/numcore/adam.h"

#include <cmath>
#include <string>

#include "charnmt/common/error.h"

namespace charnmt::numcore {

template <typename T>
AdamState<T> MakeAdamState(std::span<const Tensor<T>> params, double lr, double beta1, double beta2,
                           double epsilon) {
  AdamState<T> state;
  state.lr = lr;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  for (const auto& p : params) {
    state.m.emplace_back(p.size(), T(0));
    state.v.emplace_back(p.size(), T(0));
  }
  return state;
}

template <typename T>
void AdamStep(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam: state tracks " + std::to_string(state.m.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].size() || state.v[i].size() != params[i].size()) {
      throw DimensionError("adam: moment size mismatch for parameter " + std::to_string(i) + " (" +
                           ShapeToString(params[i].shape()) + ")");
    }
  }
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double step_size = state.lr / correction1;
  const double inv_sqrt_c2 = 1.0 / std::sqrt(correction2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params[i];
    if (!p.has_grad()) continue;
    auto g = p.grad();
    bool any = false;
    for (T x : g) {
      if (x != T(0)) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    auto w = p.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      w[j] = static_cast<T>(w[j] - step_size * mj / (std::sqrt(vj) * inv_sqrt_c2 + state.epsilon));
    }
  }
}

template AdamState<float> MakeAdamState(std::span<const Tensor<float>>, double, double, double, double);
template AdamState<double> MakeAdamState(std::span<const Tensor<double>>, double, double, double, double);
template void AdamStep(std::span<Tensor<float>>, AdamState<float>&);
template void AdamStep(std::span<Tensor<double>>, AdamState<double>&);

}  // namespace charnmt::numcore

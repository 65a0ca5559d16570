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

#ifndef CHARNMT_NUMCORE_ADAM_H_
#define CHARNMT_NUMCORE_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include "charnmt/numcore/tensor.h"

namespace charnmt::numcore {

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-9;
  double lr = 0.001;
};

template <typename T>
AdamState<T> MakeAdamState(std::span<const Tensor<T>> params, double lr, double beta1, double beta2,
                           double epsilon);

// One bias-corrected Adam update of `params` from their accumulated grads,
// at learning rate state.lr. A parameter whose gradient is absent or
// identically zero is left untouched (its moments are not decayed either).
template <typename T>
void AdamStep(std::span<Tensor<T>> params, AdamState<T>& state);

}  // namespace charnmt::numcore

#endif  // CHARNMT_NUMCORE_ADAM_H_

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

#include "charnmt/numcore/params.h"

#include <cmath>

#include "charnmt/common/error.h"
#include "charnmt/numcore/rng.h"

namespace charnmt::numcore {

template <typename T>
Tensor<T> ParameterStore<T>::Create(const std::string& name, Shape shape, Init init) {
  for (const auto& n : names_) {
    if (n == name) throw ParameterError("parameter '" + name + "' declared twice");
  }
  std::vector<T> data(NumElements(shape), T(0));
  if (init == Init::kOnes) {
    data.assign(data.size(), T(1));
  } else if (init == Init::kXavierUniform) {
    const double fan_out = static_cast<double>(shape.at(0));
    const double fan_in = shape.size() > 1 ? static_cast<double>(shape[1]) : 1.0;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng = Rng::Stream(seed_, name);
    for (auto& x : data) x = static_cast<T>(rng.Uniform(-limit, limit));
  }
  Tensor<T> t(std::move(shape), std::move(data), true);
  names_.push_back(name);
  tensors_.push_back(t);
  return t;
}

template <typename T>
std::size_t ParameterStore<T>::NumScalars() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename T>
void ParameterStore<T>::ZeroGrad() {
  for (auto& t : tensors_) t.ZeroGrad();
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace charnmt::numcore

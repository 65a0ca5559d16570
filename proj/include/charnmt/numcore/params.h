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

#ifndef CHARNMT_NUMCORE_PARAMS_H_
#define CHARNMT_NUMCORE_PARAMS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "charnmt/numcore/tensor.h"

namespace charnmt::numcore {

enum class Init { kXavierUniform, kZeros, kOnes };

// Named trainable tensors kept in declaration order. Each tensor draws its
// initial values from its own stream Rng::Stream(seed, name), so adding a
// parameter never shifts the values of the others.
template <typename T>
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  Tensor<T> Create(const std::string& name, Shape shape, Init init);

  std::size_t size() const { return tensors_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor<T>>& tensors() { return tensors_; }
  const std::vector<Tensor<T>>& tensors() const { return tensors_; }
  std::size_t NumScalars() const;
  void ZeroGrad();

 private:
  std::uint64_t seed_;
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace charnmt::numcore

#endif  // CHARNMT_NUMCORE_PARAMS_H_

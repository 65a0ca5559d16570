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

#include "charnmt/numcore/tensor.h"

#include <numeric>
#include <sstream>

#include "charnmt/common/error.h"

namespace charnmt::numcore {

std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad) {
  if (NumElements(shape) != data.size()) {
    throw DimensionError("tensor shape " + ShapeToString(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  node_ = std::make_shared<Node<T>>();
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::Zeros(Shape shape, bool requires_grad) {
  std::vector<T> data(NumElements(shape), T(0));
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::Filled(Shape shape, T value) {
  std::vector<T> data(NumElements(shape), value);
  return Tensor(std::move(shape), std::move(data));
}

template <typename T>
Tensor<T> Tensor<T>::Scalar(T value) {
  return Tensor(Shape{1}, std::vector<T>{value});
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + ShapeToString(shape()));
  return node_->data[0];
}

template <typename T>
std::size_t Tape<T>::Record(const std::shared_ptr<Node<T>>& node) {
  node->tape_id = nodes_.size();
  node->tape = this;
  nodes_.push_back(node);
  return *node->tape_id;
}

template <typename T>
void Tape<T>::Backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw TapeError("backward needs a scalar loss, got shape " +
                    (loss.defined() ? ShapeToString(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.tape_id() || loss.node().tape != this) {
    throw TapeError("loss is not recorded on this tape");
  }
  if (consumed_) throw TapeError("tape already ran backward");
  consumed_ = true;
  loss.node().GradBuffer()[0] += T(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& node = **it;
    if (!node.grad.empty() && node.backward) node.backward(node);
  }
}

namespace {

template <typename T, typename Inputs>
Tensor<T> BuildResult(Shape shape, std::vector<T> data, const Inputs& inputs,
                      std::function<void(const Node<T>&)> backward) {
  Tensor<T> out(std::move(shape), std::move(data), false);
  Tape<T>* tape = Tape<T>::Active();
  if (tape == nullptr || !backward) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || WantsGrad(in);
  if (!any) return out;
  out.node().requires_grad = true;
  out.node().backward = std::move(backward);
  tape->Record(out.ptr());
  return out;
}

template <typename T>
struct DerefRange {
  std::initializer_list<const Tensor<T>*> items;
  struct It {
    const Tensor<T>* const* p;
    const Tensor<T>& operator*() const { return **p; }
    It& operator++() {
      ++p;
      return *this;
    }
    bool operator!=(const It& o) const { return p != o.p; }
  };
  It begin() const { return It{items.begin()}; }
  It end() const { return It{items.end()}; }
};

}  // namespace

template <typename T>
Tensor<T> MakeResult(Shape shape, std::vector<T> data, std::initializer_list<const Tensor<T>*> inputs,
                     std::function<void(const Node<T>&)> backward) {
  return BuildResult<T>(std::move(shape), std::move(data), DerefRange<T>{inputs}, std::move(backward));
}

template <typename T>
Tensor<T> MakeResult(Shape shape, std::vector<T> data, const std::vector<Tensor<T>>& inputs,
                     std::function<void(const Node<T>&)> backward) {
  return BuildResult<T>(std::move(shape), std::move(data), inputs, std::move(backward));
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

template Tensor<float> MakeResult(Shape, std::vector<float>, std::initializer_list<const Tensor<float>*>,
                                  std::function<void(const Node<float>&)>);
template Tensor<double> MakeResult(Shape, std::vector<double>, std::initializer_list<const Tensor<double>*>,
                                   std::function<void(const Node<double>&)>);
template Tensor<float> MakeResult(Shape, std::vector<float>, const std::vector<Tensor<float>>&,
                                  std::function<void(const Node<float>&)>);
template Tensor<double> MakeResult(Shape, std::vector<double>, const std::vector<Tensor<double>>&,
                                   std::function<void(const Node<double>&)>);

}  // namespace charnmt::numcore

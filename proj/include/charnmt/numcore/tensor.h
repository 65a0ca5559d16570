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

#ifndef CHARNMT_NUMCORE_TENSOR_H_
#define CHARNMT_NUMCORE_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace charnmt::numcore {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

template <typename T>
class Tape;

// Storage behind a Tensor handle. `backward` reads this node's grad and
// accumulates into the grads of the inputs it captured.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::optional<std::size_t> tape_id;
  const Tape<T>* tape = nullptr;
  std::function<void(const Node&)> backward;

  std::vector<T>& GradBuffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

// Shared handle to a dense row-major array. Copies alias the same storage.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Filled(Shape shape, T value);
  static Tensor Scalar(T value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  // Matrix view: rank must be 2 (checked by the ops that need it).
  std::size_t rows() const { return node_->shape.at(0); }
  std::size_t cols() const { return node_->shape.size() > 1 ? node_->shape[1] : 1; }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T at(std::size_t i) const { return node_->data.at(i); }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->GradBuffer(); }
  void ZeroGrad() { node_->grad.clear(); }

  std::optional<std::size_t> tape_id() const { return node_->tape_id; }

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }

  // Value copy detached from any tape.
  Tensor Detach() const { return Tensor(shape(), node_->data, false); }

  static Tensor FromNode(std::shared_ptr<Node<T>> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Records op nodes in creation order. One tape per training step; a tape can
// run backward once.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t Record(const std::shared_ptr<Node<T>>& node);
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule in
  // reverse creation order.
  void Backward(const Tensor<T>& loss);

  static Tape* Active() { return active_; }

 private:
  template <typename U>
  friend class TapeScope;
  template <typename U>
  friend class NoGradScope;

  std::vector<std::shared_ptr<Node<T>>> nodes_;
  bool consumed_ = false;
  static inline thread_local Tape* active_ = nullptr;
};

// Makes `tape` the recording tape of the current thread for the scope's
// lifetime. Without an active tape ops record nothing (evaluation mode).
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(Tape<T>::active_) { Tape<T>::active_ = &tape; }
  ~TapeScope() { Tape<T>::active_ = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

// Suspends recording (for evaluation inside a training scope).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : previous_(Tape<T>::active_) { Tape<T>::active_ = nullptr; }
  ~NoGradScope() { Tape<T>::active_ = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

// Builds an op result; when an active tape exists and any input requires a
// gradient the result joins the tape with `backward` as its rule.
template <typename T>
Tensor<T> MakeResult(Shape shape, std::vector<T> data, std::initializer_list<const Tensor<T>*> inputs,
                     std::function<void(const Node<T>&)> backward);
template <typename T>
Tensor<T> MakeResult(Shape shape, std::vector<T> data, const std::vector<Tensor<T>>& inputs,
                     std::function<void(const Node<T>&)> backward);

template <typename T>
inline bool WantsGrad(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace charnmt::numcore

#endif  // CHARNMT_NUMCORE_TENSOR_H_

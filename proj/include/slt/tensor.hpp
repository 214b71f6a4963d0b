// Copyright (c) 2026 The SLT Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slt/errors.hpp"

namespace slt {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

namespace detail {

template <typename Scalar>
struct Node {
  Shape shape;
  std::vector<Scalar> value;
  std::vector<Scalar> grad;  // empty until something flows into it
  bool requires_grad = false;
  bool recorded = false;  // produced by an op on a tape

  std::vector<Scalar>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), Scalar(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major n-d array with optional gradient. Copies share storage;
/// use clone() for an independent deep copy.
template <typename Scalar>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<detail::Node<Scalar>>;

  Tensor() = default;

  Tensor(Shape shape, std::vector<Scalar> values, bool requires_grad = false)
      : node_(std::make_shared<detail::Node<Scalar>>()) {
    for (auto d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + to_string(shape));
    }
    if (numel(shape) != values.size()) {
      throw ShapeError("shape " + to_string(shape) + " needs " + std::to_string(numel(shape)) +
                       " values, got " + std::to_string(values.size()));
    }
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<Scalar>(n, Scalar(0)), requires_grad);
  }

  static Tensor full(Shape shape, Scalar value, bool requires_grad = false) {
    const auto n = numel(shape);
    return Tensor(std::move(shape), std::vector<Scalar>(n, value), requires_grad);
  }

  static Tensor scalar(Scalar value, bool requires_grad = false) {
    return Tensor(Shape{}, std::vector<Scalar>{value}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<Scalar> data() { return node_->value; }
  std::span<const Scalar> data() const { return node_->value; }
  Scalar item() const {
    if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient buffer; empty span when nothing has been accumulated.
  std::span<const Scalar> grad() const { return node_->grad; }
  /// Allocates the buffer on first use. Handles share nodes, so this is
  /// const on the handle.
  std::span<Scalar> mutable_grad() const { return node_->grad_buffer(); }
  void zero_grad() const { std::fill(node_->grad.begin(), node_->grad.end(), Scalar(0)); }

  /// Row-major view with the trailing axis as columns.
  ConstMatrixMap<Scalar> matrix() const {
    const auto cols = rank() == 0 ? 1 : shape().back();
    return ConstMatrixMap<Scalar>(node_->value.data(), size() / cols, cols);
  }
  MatrixMap<Scalar> matrix() {
    const auto cols = rank() == 0 ? 1 : shape().back();
    return MatrixMap<Scalar>(node_->value.data(), size() / cols, cols);
  }

  /// Independent copy of the values; the result is a leaf.
  Tensor clone(bool requires_grad = false) const {
    return Tensor(shape(), node_->value, requires_grad);
  }

  bool same(const Tensor& other) const { return node_ == other.node_; }
  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t, bool requires_grad = false) {
  std::vector<To> values(t.data().begin(), t.data().end());
  return Tensor<To>(t.shape(), std::move(values), requires_grad);
}

/// Ordered record of differentiable ops executed while the tape is active
/// on the current thread. One backward pass per recording; reset() to reuse.
template <typename Scalar>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const Tensor<Scalar>& output, BackwardFn backward) {
    output.node()->recorded = true;
    entries_.push_back({output.node(), std::move(backward)});
  }

  void backward(const Tensor<Scalar>& loss) {
    if (consumed_) throw TapeError("backward already ran on this tape; call reset() first");
    if (loss.size() != 1) {
      throw TapeError("backward needs a scalar loss, got shape " + to_string(loss.shape()));
    }
    if (!loss.requires_grad()) throw TapeError("loss does not depend on any requires_grad tensor");
    consumed_ = true;
    loss.node()->grad_buffer()[0] += Scalar(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      if (it->output->grad.empty()) continue;
      it->backward();
    }
  }

  void reset() {
    entries_.clear();
    consumed_ = false;
  }

  bool consumed() const { return consumed_; }
  std::size_t size() const { return entries_.size(); }

  static Tape* active() { return active_; }

 private:
  template <typename>
  friend class TapeScope;

  struct Entry {
    typename Tensor<Scalar>::NodePtr output;
    BackwardFn backward;
  };

  std::vector<Entry> entries_;
  bool consumed_ = false;
  static inline thread_local Tape* active_ = nullptr;
};

/// Makes `tape` the recording target on this thread for the scope's lifetime.
template <typename Scalar>
class TapeScope {
 public:
  explicit TapeScope(Tape<Scalar>& tape) : previous_(std::exchange(Tape<Scalar>::active_, &tape)) {}
  ~TapeScope() { Tape<Scalar>::active_ = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<Scalar>* previous_;
};

}  // namespace slt

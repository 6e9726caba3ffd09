// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emofuse/error.hpp"
#include "emofuse/rng.hpp"

namespace emofuse::ag {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

enum class Mode { Training, Inference };

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty unless requires_grad
  bool requires_grad = false;
  bool is_leaf = true;
};

/// Dense row-major array with an optional gradient buffer.
///
/// Tensor is a handle: copies share storage, so a parameter captured by a
/// graph node and the same parameter held by an optimizer see the same
/// values and gradients. Use clone() for an independent copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t size() const { return impl_->data.size(); }

  std::span<const T> data() const { return impl_->data; }
  std::span<T> mutable_data() { return impl_->data; }
  T at(std::size_t i) const { return impl_->data.at(i); }
  T item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  /// Turns this tensor into a trainable leaf and allocates a zeroed gradient.
  void set_requires_grad(bool on);
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }
  std::span<T> mutable_grad() { return impl_->grad; }
  void zero_grad();

  /// Deep copy without graph history; keeps requires_grad.
  Tensor clone() const;

  const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}
  template <typename U>
  friend class Graph;

  std::shared_ptr<TensorImpl<T>> impl_;
};

/// Ordered record of executed ops.
///
/// In Training mode every op whose inputs need gradients appends one node;
/// backward() replays the nodes in exact reverse order. Inference mode
/// records nothing and allocates no gradient buffers.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(const TensorImpl<T>& out)>;

  explicit Graph(Mode mode, Rng* rng = nullptr) : mode_(mode), rng_(rng) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Mode mode() const { return mode_; }
  bool training() const { return mode_ == Mode::Training; }
  std::size_t node_count() const { return tape_.size(); }

  /// Generator for stochastic ops; throws UsageError if none was attached.
  Rng& rng();

  /// Builds an op output. `fn` is recorded only when the graph is training
  /// and some input requires a gradient; it must accumulate into the grad
  /// buffers of those inputs that have one.
  Tensor<T> emit(const char* op, Shape shape, std::vector<T> data,
                 std::initializer_list<const Tensor<T>*> inputs, BackwardFn fn);
  Tensor<T> emit(const char* op, Shape shape, std::vector<T> data,
                 std::span<const Tensor<T>> inputs, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Gradients of intermediate
  /// tensors are reset first; leaf gradients accumulate across calls.
  void backward(const Tensor<T>& loss);

 private:
  struct Node {
    std::shared_ptr<TensorImpl<T>> output;
    BackwardFn fn;
  };

  Mode mode_;
  Rng* rng_;
  std::vector<Node> tape_;
};

/// Throws NonFiniteError naming `where` if any value is NaN or Inf.
template <typename T>
void check_finite(std::span<const T> values, const char* where);

}  // namespace emofuse::ag

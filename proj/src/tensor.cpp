// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace emofuse::ag {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
void check_finite(std::span<const T> values, const char* where) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << where << ": non-finite value " << values[i] << " at flat index " << i;
      throw NonFiniteError(os.str());
    }
  }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl<T>>()) {
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_str(shape) + " needs " + std::to_string(numel(shape)) +
                         " values, got " + std::to_string(data.size()));
  }
  check_finite<T>(data, "tensor construction");
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  set_requires_grad(requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  const auto n = numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (impl_->data.size() != 1) {
    throw DimensionError("item() on non-scalar tensor " + shape_str(impl_->shape));
  }
  return impl_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  if (on) {
    impl_->grad.assign(impl_->data.size(), T(0));
  } else {
    impl_->grad.clear();
  }
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  auto copy = std::make_shared<TensorImpl<T>>(*impl_);
  copy->is_leaf = true;
  return Tensor(std::move(copy));
}

template <typename T>
Rng& Graph<T>::rng() {
  if (rng_ == nullptr) throw UsageError("graph has no random generator attached");
  return *rng_;
}

template <typename T>
Tensor<T> Graph<T>::emit(const char* op, Shape shape, std::vector<T> data,
                         std::initializer_list<const Tensor<T>*> inputs, BackwardFn fn) {
  std::vector<Tensor<T>> copies;
  copies.reserve(inputs.size());
  for (const auto* t : inputs) copies.push_back(*t);
  return emit(op, std::move(shape), std::move(data), std::span<const Tensor<T>>(copies), std::move(fn));
}

template <typename T>
Tensor<T> Graph<T>::emit(const char* op, Shape shape, std::vector<T> data,
                         std::span<const Tensor<T>> inputs, BackwardFn fn) {
  check_finite<T>(data, op);
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  const bool needs_grad =
      training() && std::any_of(inputs.begin(), inputs.end(),
                                [](const Tensor<T>& t) { return t.requires_grad(); });
  if (needs_grad) {
    impl->requires_grad = true;
    impl->is_leaf = false;
    impl->grad.assign(impl->data.size(), T(0));
    tape_.push_back(Node{impl, std::move(fn)});
  }
  return Tensor<T>(std::move(impl));
}

template <typename T>
void Graph<T>::backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward on a loss that was not produced in Training mode from trainable inputs");
  }
  for (auto& node : tape_) std::fill(node.output->grad.begin(), node.output->grad.end(), T(0));
  loss.impl()->grad[0] += T(1);
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) it->fn(*it->output);
}

template class Tensor<float>;
template class Tensor<double>;
template class Graph<float>;
template class Graph<double>;
template void check_finite<float>(std::span<const float>, const char*);
template void check_finite<double>(std::span<const double>, const char*);

}  // namespace emofuse::ag

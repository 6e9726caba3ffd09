// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "emofuse/tensor.hpp"

// Differentiable ops. Every op validates shapes, refuses non-finite values,
// and records its backward closure on the graph when training.
namespace emofuse::ag {

/// Row mask: nonzero marks a valid row/column.
using Mask = std::vector<std::uint8_t>;

/// [m x p] . [p x q] -> [m x q]; accumulation in double.
template <typename T>
Tensor<T> matmul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(Graph<T>& g, const Tensor<T>& a);

template <typename T>
Tensor<T> add(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

/// x[m x n] + bias[n] on every row.
template <typename T>
Tensor<T> add_row(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& bias);

/// Elementwise product of same-shape tensors.
template <typename T>
Tensor<T> mul(Graph<T>& g, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(Graph<T>& g, const Tensor<T>& x, T factor);

/// Sum of all elements as a scalar (shape {}).
template <typename T>
Tensor<T> sum(Graph<T>& g, const Tensor<T>& x);

/// Softmax over the last axis with max subtraction.
template <typename T>
Tensor<T> softmax(Graph<T>& g, const Tensor<T>& x);

/// Softmax over the columns of a 2-D tensor where columns with mask 0 get
/// bias -inf (probability exactly 0). At least one column must be valid.
template <typename T>
Tensor<T> masked_softmax(Graph<T>& g, const Tensor<T>& x, const Mask& column_mask);

/// Normalizes each last-axis slice to zero mean / unit variance, then
/// applies gamma * xhat + beta.
template <typename T>
Tensor<T> layer_norm(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps = 1e-5);

/// Inverted dropout: Training zeroes each element with probability p and
/// scales survivors by 1/(1-p); Inference is the identity.
template <typename T>
Tensor<T> dropout(Graph<T>& g, const Tensor<T>& x, double p);

/// Mean over rows of [t x c] -> [c].
template <typename T>
Tensor<T> mean_pool(Graph<T>& g, const Tensor<T>& x);

/// Mean over the rows whose mask entry is nonzero.
template <typename T>
Tensor<T> mean_pool(Graph<T>& g, const Tensor<T>& x, const Mask& row_mask);

/// Order-preserving concatenation of 1-D tensors.
template <typename T>
Tensor<T> concat(Graph<T>& g, std::span<const Tensor<T>> xs);

/// Concatenation of 2-D tensors with equal row counts along columns.
template <typename T>
Tensor<T> concat_cols(Graph<T>& g, std::span<const Tensor<T>> xs);

/// Columns [begin, end) of a 2-D tensor.
template <typename T>
Tensor<T> slice_cols(Graph<T>& g, const Tensor<T>& x, std::size_t begin, std::size_t end);

/// Stacks equal-length 1-D tensors into rows of a 2-D tensor.
template <typename T>
Tensor<T> stack_rows(Graph<T>& g, std::span<const Tensor<T>> xs);

template <typename T>
Tensor<T> reshape(Graph<T>& g, const Tensor<T>& x, Shape shape);

}  // namespace emofuse::ag

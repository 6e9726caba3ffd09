// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

#include "emofuse/tensor.hpp"

namespace emofuse::ag {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

/// Compares the reverse-mode gradient of a scalar function against central
/// differences, element by element of `x`:
///
///   rel = |g_ad - g_fd| / max(|g_ad|, |g_fd|, 1e-8)
///
/// `f` builds its computation on the graph it is given. It is evaluated
/// twice without perturbation first; if the two values differ bitwise the
/// function is non-deterministic and UsageError is thrown. `x` must be a
/// trainable leaf used by `f`; its gradient buffer is left zeroed.
template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>(Graph<T>&)>& f, Tensor<T> x, double eps,
                           double tol, Rng* rng = nullptr);

}  // namespace emofuse::ag

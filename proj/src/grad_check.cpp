// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace emofuse::ag {

template <typename T>
GradCheckReport grad_check(const std::function<Tensor<T>(Graph<T>&)>& f, Tensor<T> x, double eps,
                           double tol, Rng* rng) {
  if (!x.requires_grad()) throw UsageError("grad_check: input tensor does not require a gradient");
  if (!(eps > 0.0)) throw ParameterError("grad_check: eps must be positive");

  auto evaluate = [&]() {
    Graph<T> g(Mode::Training, rng);
    return f(g).item();
  };

  x.zero_grad();
  std::vector<T> analytic;
  T reference;
  {
    Graph<T> g(Mode::Training, rng);
    const auto loss = f(g);
    reference = loss.item();
    g.backward(loss);
    analytic.assign(x.grad().begin(), x.grad().end());
  }
  x.zero_grad();
  if (evaluate() != reference) {
    throw UsageError("grad_check: function is not deterministic (two forward passes differ)");
  }

  GradCheckReport report;
  auto values = x.mutable_data();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const T original = values[i];
    const T plus = static_cast<T>(original + eps);
    const T minus = static_cast<T>(original - eps);
    values[i] = plus;
    const double f_plus = evaluate();
    values[i] = minus;
    const double f_minus = evaluate();
    values[i] = original;
    const double numeric = (f_plus - f_minus) / (double(plus) - double(minus));
    const double ad = analytic[i];
    const double denom = std::max({std::abs(ad), std::abs(numeric), 1e-8});
    const double rel = std::abs(ad - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
    ++report.checked;
  }
  x.zero_grad();
  report.passed = report.max_rel_error <= tol;
  return report;
}

template GradCheckReport grad_check<float>(const std::function<Tensor<float>(Graph<float>&)>&, Tensor<float>,
                                           double, double, Rng*);
template GradCheckReport grad_check<double>(const std::function<Tensor<double>(Graph<double>&)>&,
                                            Tensor<double>, double, double, Rng*);

}  // namespace emofuse::ag

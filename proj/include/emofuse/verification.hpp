// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emofuse/model.hpp"

namespace emofuse {

struct GradCheckSuiteConfig {
  ModelConfig model = tiny_model();
  std::size_t batch = 3;
  double eps = 1e-3;
  double tol = 1e-4;
  std::uint64_t seed = 7;

  /// d=8, heads=2, n=4, all input dims 8, dropout off.
  static ModelConfig tiny_model();
};

struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckSuiteResult {
  std::vector<GradCheckEntry> entries;
  bool passed = false;
};

/// Finite-difference check of the cross-entropy loss of a small synthetic
/// batch against every parameter tensor of the model. Runs in double.
GradCheckSuiteResult run_gradcheck_suite(const GradCheckSuiteConfig& config);

}  // namespace emofuse

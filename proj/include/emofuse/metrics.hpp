// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace emofuse {

/// Rows are true labels, columns predictions.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // classes x classes
  std::vector<double> normalized;   // each row divided by its total; all-zero rows stay zero

  std::size_t count(std::size_t truth, std::size_t predicted) const { return counts[truth * classes + predicted]; }
  double rate(std::size_t truth, std::size_t predicted) const { return normalized[truth * classes + predicted]; }
  std::size_t total() const;
  std::size_t trace() const;
  double accuracy() const;
  /// 0 when the class is never predicted.
  double precision(std::size_t c) const;
  /// 0 when the class never occurs.
  double recall(std::size_t c) const;
};

/// ParameterError on length mismatch, empty input, or a label >= classes.
ConfusionMatrix confusion(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                          std::size_t classes = 6);
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct RunReport {
  std::string split;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<double> precision;
  std::vector<double> recall;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> split_sizes;
  std::string checkpoint_digest;
  std::string stats_digest;
  std::string manifest_digest;
  std::string model_config;  // compact JSON of the model configuration
};

RunReport make_report(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

nlohmann::json report_to_json(const RunReport& report);
/// Row-normalized matrix with a header of class names.
std::string confusion_csv(const ConfusionMatrix& cm);
/// Human-readable summary; percentages with two decimals.
std::string format_report_table(const RunReport& report);

}  // namespace emofuse

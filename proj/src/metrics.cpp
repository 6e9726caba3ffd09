// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "emofuse/error.hpp"
#include "emofuse/features.hpp"

namespace emofuse {
namespace {

std::string class_name(std::size_t c) {
  return c < kEmotionCount ? std::string(label_name(static_cast<EmotionLabel>(c))) : "class" + std::to_string(c);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

void require_pairs(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) {
    throw ParameterError("metrics: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw ParameterError("metrics: no samples");
}

}  // namespace

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes; ++c) n += count(c, c);
  return n;
}

double ConfusionMatrix::accuracy() const {
  const auto n = total();
  return n == 0 ? 0.0 : double(trace()) / double(n);
}

double ConfusionMatrix::precision(std::size_t c) const {
  std::size_t column = 0;
  for (std::size_t t = 0; t < classes; ++t) column += count(t, c);
  return column == 0 ? 0.0 : double(count(c, c)) / double(column);
}

double ConfusionMatrix::recall(std::size_t c) const {
  std::size_t row = 0;
  for (std::size_t p = 0; p < classes; ++p) row += count(c, p);
  return row == 0 ? 0.0 : double(count(c, c)) / double(row);
}

ConfusionMatrix confusion(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                          std::size_t classes) {
  require_pairs(predicted, truth);
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(classes * classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes) {
      throw ParameterError("confusion: label out of range at sample " + std::to_string(i));
    }
    ++cm.counts[truth[i] * classes + predicted[i]];
  }
  cm.normalized.assign(classes * classes, 0.0);
  for (std::size_t t = 0; t < classes; ++t) {
    std::size_t row = 0;
    for (std::size_t p = 0; p < classes; ++p) row += cm.count(t, p);
    if (row == 0) continue;
    for (std::size_t p = 0; p < classes; ++p) cm.normalized[t * classes + p] = double(cm.count(t, p)) / double(row);
  }
  return cm;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  require_pairs(predicted, truth);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i] ? 1 : 0;
  return double(correct) / double(truth.size());
}

RunReport make_report(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  RunReport r;
  r.confusion = confusion(predicted, truth, kEmotionCount);
  r.accuracy = accuracy(predicted, truth);
  for (std::size_t c = 0; c < kEmotionCount; ++c) {
    r.precision.push_back(r.confusion.precision(c));
    r.recall.push_back(r.confusion.recall(c));
  }
  return r;
}

nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::array();
  nlohmann::json normalized = nlohmann::json::array();
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t t = 0; t < r.confusion.classes; ++t) {
    classes.push_back(class_name(t));
    nlohmann::json count_row = nlohmann::json::array();
    nlohmann::json norm_row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.confusion.classes; ++p) {
      count_row.push_back(r.confusion.count(t, p));
      norm_row.push_back(r.confusion.rate(t, p));
    }
    counts.push_back(std::move(count_row));
    normalized.push_back(std::move(norm_row));
    per_class[class_name(t)] = {{"precision", r.precision.at(t)}, {"recall", r.recall.at(t)}};
  }
  return {
      {"split", r.split},
      {"accuracy", r.accuracy},
      {"accuracy_percent", fixed(100.0 * r.accuracy, 2)},
      {"samples", r.confusion.total()},
      {"classes", classes},
      {"confusion_counts", counts},
      {"confusion_normalized", normalized},
      {"per_class", per_class},
      {"seed", r.seed},
      {"split_sizes", r.split_sizes},
      {"digests", {{"checkpoint", r.checkpoint_digest}, {"stats", r.stats_digest}, {"manifest", r.manifest_digest}}},
      {"model_config", r.model_config.empty() ? nlohmann::json() : nlohmann::json::parse(r.model_config)},
  };
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true\\predicted";
  for (std::size_t p = 0; p < cm.classes; ++p) os << ',' << class_name(p);
  os << '\n';
  for (std::size_t t = 0; t < cm.classes; ++t) {
    os << class_name(t);
    for (std::size_t p = 0; p < cm.classes; ++p) os << ',' << fixed(cm.rate(t, p), 6);
    os << '\n';
  }
  return os.str();
}

std::string format_report_table(const RunReport& r) {
  std::ostringstream os;
  char line[160];
  os << "split: " << r.split << "  samples: " << r.confusion.total() << "  accuracy: " << fixed(100.0 * r.accuracy, 2)
     << "%\n\n";
  std::snprintf(line, sizeof line, "%-10s", "true\\pred");
  os << line;
  for (std::size_t p = 0; p < r.confusion.classes; ++p) {
    std::snprintf(line, sizeof line, "%9s", class_name(p).c_str());
    os << line;
  }
  os << "   recall  precision\n";
  for (std::size_t t = 0; t < r.confusion.classes; ++t) {
    std::snprintf(line, sizeof line, "%-10s", class_name(t).c_str());
    os << line;
    for (std::size_t p = 0; p < r.confusion.classes; ++p) {
      std::snprintf(line, sizeof line, "%8.2f%%", 100.0 * r.confusion.rate(t, p));
      os << line;
    }
    std::snprintf(line, sizeof line, "  %6.2f%%  %8.2f%%\n", 100.0 * r.recall.at(t), 100.0 * r.precision.at(t));
    os << line;
  }
  return os.str();
}

}  // namespace emofuse

// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "emofuse/error.hpp"

namespace emofuse {

std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, SamplingMode mode, Rng* rng) {
  if (total == 0 || n == 0) throw ParameterError("sample_indices: total and n must be at least 1");
  std::vector<std::size_t> out;
  out.reserve(n);
  if (total < n) {
    for (std::size_t i = 0; i < total; ++i) out.push_back(i);
    out.resize(n, total - 1);
    return out;
  }
  if (mode == SamplingMode::Equidistant) {
    if (n == 1) return {0};
    for (std::size_t i = 0; i < n; ++i) out.push_back(i * (total - 1) / (n - 1));
    return out;
  }
  if (rng == nullptr) throw UsageError("sample_indices: Random mode needs a generator");
  // Partial Fisher-Yates over 0..total-1.
  std::vector<std::size_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng->below(total - i));
    std::swap(pool[i], pool[j]);
  }
  out.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(out.begin(), out.end());
  return out;
}

VideoFeatures select_frames(const VideoFeatures& video, std::span<const std::size_t> indices) {
  const auto& f = video.features;
  const std::size_t total = f.frames();
  for (auto idx : indices) {
    if (idx >= total) {
      throw ParameterError("select_frames: index " + std::to_string(idx) + " out of range for " +
                           std::to_string(total) + " stored frames");
    }
  }
  VideoFeatures out;
  out.video_id = video.video_id;
  out.label = video.label;
  auto& s = out.features;
  s.clip = Matrix(indices.size(), f.clip.cols);
  s.beats = Matrix(indices.size(), f.beats.cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::ranges::copy(f.clip.row(indices[i]), s.clip.row(i).begin());
    std::ranges::copy(f.beats.row(indices[i]), s.beats.row(i).begin());
  }
  std::vector<bool> selected(total, false);
  for (auto idx : indices) selected[idx] = true;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < f.expression.rows; ++r) {
    if (selected[f.expression_frames[r]]) keep.push_back(r);
  }
  s.expression = Matrix(keep.size(), f.expression.cols);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    std::ranges::copy(f.expression.row(keep[i]), s.expression.row(i).begin());
    s.expression_frames.push_back(f.expression_frames[keep[i]]);
  }
  s.ocr_sentiment = f.ocr_sentiment;
  s.asr_sentiment = f.asr_sentiment;
  s.ocr_present = f.ocr_present;
  s.asr_present = f.asr_present;
  return out;
}

std::optional<std::vector<float>> merge_face_features(std::span<const DetectedFace> faces) {
  if (faces.empty()) return std::nullopt;
  if (faces.size() == 1) return faces.front().feature;
  std::vector<std::size_t> order(faces.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return faces[a].area > faces[b].area; });
  const auto& a = faces[order[0]].feature;
  const auto& b = faces[order[1]].feature;
  if (a.size() != b.size()) throw DimensionError("merge_face_features: feature widths differ");
  std::vector<float> out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = (a[j] + b[j]) / 2.0f;
  return out;
}

}  // namespace emofuse

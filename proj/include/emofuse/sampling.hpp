// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "emofuse/features.hpp"
#include "emofuse/rng.hpp"

namespace emofuse {

enum class SamplingMode { Random, Equidistant };

/// Picks n frame positions out of `total`.
///
/// Equidistant: floor(i (total-1) / (n-1)), or [0] when n == 1.
/// Random: n distinct positions without replacement, sorted ascending.
/// When total < n both modes return 0..total-1 padded with total-1.
/// Random mode needs `rng`; ParameterError if total or n is zero.
std::vector<std::size_t> sample_indices(std::size_t total, std::size_t n, SamplingMode mode, Rng* rng = nullptr);

/// Gathers clip/beats rows by `indices`; keeps each expression row whose
/// frame is among the selected ones, once, in original order. Sentiment
/// vectors pass through.
VideoFeatures select_frames(const VideoFeatures& video, std::span<const std::size_t> indices);

struct DetectedFace {
  double area = 0.0;  // pixels^2
  std::vector<float> feature;
};

/// Mean of the two largest faces' features (ties keep list order); the sole
/// feature for one face; nullopt for none.
std::optional<std::vector<float>> merge_face_features(std::span<const DetectedFace> faces);

}  // namespace emofuse

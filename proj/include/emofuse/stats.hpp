// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emofuse/features.hpp"
#include "emofuse/manifest.hpp"

namespace emofuse {

struct ChannelRange {
  std::vector<float> min;
  std::vector<float> max;

  friend bool operator==(const ChannelRange& a, const ChannelRange& b) {
    return bitwise_equal(a.min, b.min) && bitwise_equal(a.max, b.max);
  }
};

/// Per-modality, per-channel min/max over every row of every training video.
/// Absent sentiment vectors are not counted; a modality with no rows at all
/// gets min = max = 0.
struct ModalityStats {
  std::array<ChannelRange, kModalityCount> ranges;

  const ChannelRange& operator[](Modality m) const { return ranges[static_cast<std::size_t>(m)]; }
  ChannelRange& operator[](Modality m) { return ranges[static_cast<std::size_t>(m)]; }
  InputDims dims() const;

  friend bool operator==(const ModalityStats&, const ModalityStats&) = default;
};

inline constexpr float kNormalizedConstant = 0.5f;
inline constexpr float kNormalizedLow = -1.0f;
inline constexpr float kNormalizedHigh = 2.0f;

/// ParameterError when `videos` is empty.
ModalityStats compute_stats(std::span<const VideoFeatures> videos);
ModalityStats compute_stats(const DatasetManifest& manifest, Split split = Split::Train);

/// (x - min) / (max - min) per channel, clamped to [-1, 2]; channels with
/// max == min map to 0.5.
Matrix normalize(const Matrix& x, const ChannelRange& range);
std::vector<float> normalize(std::span<const float> x, const ChannelRange& range);
/// Inverse of normalize() on non-degenerate channels inside the range.
Matrix denormalize(const Matrix& x, const ChannelRange& range);

/// Normalizes all five modalities; absent sentiment vectors stay zero.
VideoFeatures normalize_video(const VideoFeatures& video, const ModalityStats& stats);

std::string encode_stats(const ModalityStats& stats);
ModalityStats decode_stats(std::string_view bytes);
void write_stats(const ModalityStats& stats, const std::filesystem::path& path);
ModalityStats read_stats(const std::filesystem::path& path);
/// CRC-32 of the encoded stats, as 8 hex digits.
std::string stats_digest(const ModalityStats& stats);

}  // namespace emofuse

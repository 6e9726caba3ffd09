// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "emofuse/features.hpp"
#include "emofuse/manifest.hpp"

namespace emofuse {

/// Desk-scale dataset with a known answer. Class c's clip rows are drawn
/// around mean (margin * sigma / sqrt(2)) e_c, so any two class means are
/// margin * sigma apart; every other modality is label-free noise.
struct SynthConfig {
  std::size_t videos_per_class = 10;  // train split
  std::size_t test_per_class = 0;
  std::size_t frames = 4;  // stored frames per video
  InputDims dims{8, 8, 8, 8};
  double margin = 10.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

struct SynthDataset {
  DatasetManifest manifest;           // paths are "videos/<id>.vmf"
  std::vector<VideoFeatures> videos;  // manifest order
  /// Nearest-class-mean accuracy on the per-video mean clip row, using the
  /// generating means (ties to the lowest class).
  double oracle_accuracy = 0.0;
};

/// ParameterError if margin < 0, sigma <= 0, frames == 0, or dims.clip < 6.
SynthDataset synth_dataset(const SynthConfig& config);

/// Writes every container plus manifest.csv under `dir`.
void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir);

/// Class mean used by synth_dataset for clip channel j.
double synth_class_mean(const SynthConfig& config, std::size_t label, std::size_t channel);

}  // namespace emofuse

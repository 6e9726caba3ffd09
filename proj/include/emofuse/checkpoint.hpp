// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "emofuse/model.hpp"

namespace emofuse {

/// Trained model on disk: one VMF1 entry per parameter tensor plus a
/// "config.json" entry with the model configuration and provenance.
struct Checkpoint {
  ModelConfig config;
  FusionModelParams<float> params;
  std::uint64_t seed = 0;
  std::string stats_digest;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
};

nlohmann::json config_to_json(const ModelConfig& config);
/// Throws ConfigError on missing or malformed fields.
ModelConfig config_from_json(const nlohmann::json& j);

std::string encode_checkpoint(const Checkpoint& checkpoint);
/// Throws DecodeError, or DimensionError if a tensor disagrees with the config.
Checkpoint decode_checkpoint(std::string_view bytes);
void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace emofuse

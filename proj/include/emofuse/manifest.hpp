// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "emofuse/features.hpp"

namespace emofuse {

enum class Split : std::uint8_t { Train, Test, Validation };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct ManifestRow {
  std::string video_id;
  EmotionLabel label = EmotionLabel::Anger;
  Split split = Split::Train;
  std::string path;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// CSV `video_id,label,split,path`. Relative paths resolve against
/// `base_dir`, then against $VEMOCLAP_DATA_DIR.
struct DatasetManifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;

  std::size_t count(Split split) const;
  std::vector<ManifestRow> rows_in(Split split) const;
  std::filesystem::path resolve(const ManifestRow& row) const;
};

/// Throws ParameterError on a bad header, unknown label/split or duplicate id.
DatasetManifest parse_manifest(std::string_view text, std::filesystem::path base_dir = {});
DatasetManifest read_manifest(const std::filesystem::path& path);
std::string format_manifest(const DatasetManifest& manifest);
/// Rebases relative paths so they still resolve from the new location.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Loads and validates the container behind every row of `split`.
std::vector<VideoFeatures> load_split(const DatasetManifest& manifest, Split split);
VideoFeatures load_row(const DatasetManifest& manifest, const ManifestRow& row);

/// One id per line; blank lines and '#' comments are skipped; surrounding
/// whitespace is trimmed.
std::set<std::string> parse_blacklist(std::string_view text);
std::set<std::string> read_blacklist(const std::filesystem::path& path);

struct CleanResult {
  DatasetManifest manifest;
  std::size_t removed_train = 0;
  std::size_t removed_test = 0;
  std::size_t removed_validation = 0;
  std::vector<std::string> warnings;  // blacklist ids with no matching row
};

/// Drops every row whose id is blacklisted. A blacklist entry also matches a
/// row whose id equals the entry's file stem (".../anger_x.mp4" -> "anger_x").
CleanResult apply_blacklist(const DatasetManifest& manifest, const std::set<std::string>& blacklist);

struct SplitResult {
  DatasetManifest manifest;
  std::vector<std::string> warnings;
};

/// Per class, ids sorted byte-wise; the first ceil(0.95 m) become train and
/// the rest validation. Every input row takes part regardless of its split.
SplitResult build_app_split(const DatasetManifest& manifest);

/// Moves round(fraction * m) train rows of each class to validation, chosen
/// by a seeded shuffle. Non-train rows are untouched.
DatasetManifest carve_validation(const DatasetManifest& manifest, double fraction, std::uint64_t seed);

}  // namespace emofuse

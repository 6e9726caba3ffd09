// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace emofuse {

/// Environment variable consulted when a relative input path does not exist.
inline constexpr const char* kDataDirEnv = "VEMOCLAP_DATA_DIR";

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`, so a
/// failed write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// `path` if it exists (or is absolute); otherwise $VEMOCLAP_DATA_DIR/path
/// when that exists; otherwise `path` unchanged.
std::filesystem::path resolve_input_path(const std::filesystem::path& path);

/// IEEE CRC-32 (zlib polynomial).
std::uint32_t crc32(std::string_view bytes);
std::string hex32(std::uint32_t value);

}  // namespace emofuse

// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "emofuse/error.hpp"
#include "emofuse/features.hpp"

// VMF1 binary container, little-endian throughout:
//
//   "VMF1"                       4 bytes magic
//   version                      u32 (currently 1)
//   entry count                  u8
//   per entry:
//     name length                u16, then UTF-8 name bytes
//     presence flag              u8 (0 = absent / zeroed)
//     ndim                       u8, then ndim x u32 dims
//     [expression only]          dims[0] x u32 frame indices
//     payload                    prod(dims) x f32
//   CRC-32 of all preceding bytes  u32
//
// The entry named "config.json" is the one exception to the f32 payload: it
// has ndim 1 and its payload is dims[0] raw UTF-8 bytes. Checkpoints use
// it; feature containers never do.
namespace emofuse {

inline constexpr char kMagic[4] = {'V', 'M', 'F', '1'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::string_view kJsonEntryName = "config.json";
inline constexpr std::string_view kIndexedEntryName = "expression";

enum class DecodeErrorKind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, InvariantViolation };

std::string_view decode_error_kind_name(DecodeErrorKind kind);

class DecodeError : public Error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : Error(std::string(decode_error_kind_name(kind)) + ": " + what), kind_(kind) {}
  DecodeErrorKind kind() const { return kind_; }

 private:
  DecodeErrorKind kind_;
};

struct Entry {
  std::string name;
  bool present = true;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint32_t> frame_indices;  // only for "expression"
  std::vector<float> values;                 // f32 payload
  std::string bytes;                         // only for "config.json"
};

std::string encode_entries(const std::vector<Entry>& entries);
std::vector<Entry> decode_entries(std::string_view bytes);

/// Hex CRC32 of everything before the checksum trailer. Hashing the whole
/// file would give the same constant for every valid container.
std::string container_digest(std::string_view bytes);

/// Feature container codec: exactly the five modality entries.
std::string encode_container(const FeatureArrays& features);
FeatureArrays decode_container(std::string_view bytes);

void write_container(const FeatureArrays& features, const std::filesystem::path& path);
FeatureArrays read_container(const std::filesystem::path& path);

}  // namespace emofuse

// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/container.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <limits>

#include "emofuse/io.hpp"

namespace emofuse {

std::string_view decode_error_kind_name(DecodeErrorKind kind) {
  switch (kind) {
    case DecodeErrorKind::BadMagic: return "bad magic";
    case DecodeErrorKind::VersionMismatch: return "version mismatch";
    case DecodeErrorKind::Truncated: return "truncated payload";
    case DecodeErrorKind::ChecksumMismatch: return "checksum mismatch";
    case DecodeErrorKind::InvariantViolation: return "invariant violation";
  }
  return "decode error";
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { out_.append(s); }
  std::string& str() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return limit_ - pos_; }

  void need(std::size_t n, const char* what) const {
    if (n > remaining()) {
      throw DecodeError(DecodeErrorKind::Truncated, std::string(what) + " needs " + std::to_string(n) +
                                                        " bytes at offset " + std::to_string(pos_) + ", " +
                                                        std::to_string(remaining()) + " left");
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint8_t>(bytes_[pos_]) |
                      static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<std::uint8_t>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string_view raw(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

std::uint64_t element_count(const std::vector<std::uint32_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw DecodeError(DecodeErrorKind::InvariantViolation, "dimension product overflows");
    }
    n *= d;
  }
  return n;
}

[[noreturn]] void invariant(const std::string& what) {
  throw DecodeError(DecodeErrorKind::InvariantViolation, what);
}

}  // namespace

std::string encode_entries(const std::vector<Entry>& entries) {
  if (entries.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw ParameterError("container holds at most 255 entries, got " + std::to_string(entries.size()));
  }
  Writer w;
  w.raw(std::string_view(kMagic, 4));
  w.u32(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.empty() || e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ParameterError("entry name length out of range");
    }
    if (e.dims.size() > std::numeric_limits<std::uint8_t>::max()) throw ParameterError("too many dims");
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(e.name);
    w.u8(e.present ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) w.u32(d);
    if (e.name == kJsonEntryName) {
      if (e.dims.size() != 1 || e.dims[0] != e.bytes.size()) {
        throw ParameterError("config.json entry dims must be [byte length]");
      }
      w.raw(e.bytes);
      continue;
    }
    if (e.name == kIndexedEntryName) {
      if (e.dims.empty() || e.frame_indices.size() != e.dims[0]) {
        throw ParameterError("expression entry needs dims[0] frame indices");
      }
      for (auto idx : e.frame_indices) w.u32(idx);
    }
    if (element_count(e.dims) != e.values.size()) {
      throw ParameterError("entry '" + e.name + "' payload does not match its dims");
    }
    for (float v : e.values) w.f32(v);
  }
  w.u32(crc32(w.str()));
  return std::move(w.str());
}

std::vector<Entry> decode_entries(std::string_view bytes) {
  if (bytes.size() < 4) throw DecodeError(DecodeErrorKind::Truncated, "file shorter than magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DecodeError(DecodeErrorKind::BadMagic, "expected \"VMF1\"");
  }
  if (bytes.size() < 4 + 4 + 1 + 4) throw DecodeError(DecodeErrorKind::Truncated, "header incomplete");
  Reader r(bytes, bytes.size() - 4);
  r.raw(4, "magic");
  const auto version = r.u32("version");
  if (version != kFormatVersion) {
    throw DecodeError(DecodeErrorKind::VersionMismatch,
                      "file version " + std::to_string(version) + ", reader supports " +
                          std::to_string(kFormatVersion));
  }
  const auto count = r.u8("entry count");
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint8_t i = 0; i < count; ++i) {
    Entry e;
    const auto name_len = r.u16("name length");
    e.name = std::string(r.raw(name_len, "name"));
    const auto presence = r.u8("presence flag");
    if (presence > 1) invariant("presence flag must be 0 or 1 in entry '" + e.name + "'");
    e.present = presence == 1;
    const auto ndim = r.u8("ndim");
    for (std::uint8_t d = 0; d < ndim; ++d) e.dims.push_back(r.u32("dims"));
    if (e.name == kJsonEntryName) {
      if (ndim != 1) invariant("config.json entry must be 1-D");
      e.bytes = std::string(r.raw(e.dims[0], "json payload"));
      entries.push_back(std::move(e));
      continue;
    }
    if (e.name == kIndexedEntryName) {
      if (ndim < 1) invariant("expression entry needs a leading k dimension");
      r.need(std::size_t(e.dims[0]) * 4, "frame indices");
      for (std::uint32_t k = 0; k < e.dims[0]; ++k) e.frame_indices.push_back(r.u32("frame index"));
    }
    const auto n = element_count(e.dims);
    // Bounds check before allocating so a hostile header cannot request gigabytes.
    if (n > r.remaining() / 4) {
      throw DecodeError(DecodeErrorKind::Truncated, "entry '" + e.name + "' declares " + std::to_string(n) +
                                                        " values, only " + std::to_string(r.remaining()) +
                                                        " bytes left");
    }
    e.values.resize(static_cast<std::size_t>(n));
    for (auto& v : e.values) v = std::bit_cast<float>(r.u32("payload"));
    entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) {
    throw DecodeError(DecodeErrorKind::Truncated, std::to_string(r.remaining()) +
                                                      " unexpected bytes before checksum; payload misaligned");
  }
  Reader tail(bytes.substr(bytes.size() - 4), 4);
  const auto stored = tail.u32("checksum");
  const auto actual = crc32(bytes.substr(0, bytes.size() - 4));
  if (stored != actual) {
    throw DecodeError(DecodeErrorKind::ChecksumMismatch, "stored " + hex32(stored) + ", computed " + hex32(actual));
  }
  return entries;
}

std::string container_digest(std::string_view bytes) {
  if (bytes.size() < 4) throw DecodeError(DecodeErrorKind::Truncated, "container shorter than its checksum");
  return hex32(crc32(bytes.substr(0, bytes.size() - 4)));
}

namespace {

Entry matrix_entry(Modality m, const Matrix& x, bool present) {
  Entry e;
  e.name = std::string(modality_name(m));
  e.present = present;
  e.dims = {static_cast<std::uint32_t>(x.rows), static_cast<std::uint32_t>(x.cols)};
  e.values = x.values;
  return e;
}

Entry vector_entry(Modality m, const std::vector<float>& v, bool present) {
  Entry e;
  e.name = std::string(modality_name(m));
  e.present = present;
  e.dims = {static_cast<std::uint32_t>(v.size())};
  e.values = v;
  return e;
}

Matrix entry_matrix(const Entry& e) {
  if (e.dims.size() != 2) invariant("'" + e.name + "' must be 2-D");
  return Matrix(e.dims[0], e.dims[1], e.values);
}

}  // namespace

std::string encode_container(const FeatureArrays& f) {
  f.validate();
  std::vector<Entry> entries;
  entries.push_back(matrix_entry(Modality::Clip, f.clip, true));
  entries.push_back(matrix_entry(Modality::Beats, f.beats, true));
  auto expr = matrix_entry(Modality::Expression, f.expression, f.expression.rows > 0);
  expr.frame_indices = f.expression_frames;
  entries.push_back(std::move(expr));
  entries.push_back(vector_entry(Modality::OcrSentiment, f.ocr_sentiment, f.ocr_present));
  entries.push_back(vector_entry(Modality::AsrSentiment, f.asr_sentiment, f.asr_present));
  return encode_entries(entries);
}

FeatureArrays decode_container(std::string_view bytes) {
  const auto entries = decode_entries(bytes);
  if (entries.size() != kModalityCount) {
    invariant("feature container needs 5 entries, found " + std::to_string(entries.size()));
  }
  std::array<const Entry*, kModalityCount> by_modality{};
  for (const auto& e : entries) {
    Modality m;
    try {
      m = parse_modality(e.name);
    } catch (const ParameterError&) {
      invariant("unexpected entry '" + e.name + "' in feature container");
    }
    auto& slot = by_modality[static_cast<std::size_t>(m)];
    if (slot != nullptr) invariant("duplicate entry '" + e.name + "'");
    slot = &e;
  }
  FeatureArrays f;
  const Entry& clip = *by_modality[0];
  const Entry& beats = *by_modality[1];
  const Entry& expr = *by_modality[2];
  const Entry& ocr = *by_modality[3];
  const Entry& asr = *by_modality[4];
  if (!clip.present || !beats.present) invariant("clip and beats must be present");
  f.clip = entry_matrix(clip);
  f.beats = entry_matrix(beats);
  f.expression = entry_matrix(expr);
  f.expression_frames = expr.frame_indices;
  if (expr.present != (f.expression.rows > 0)) invariant("expression presence flag disagrees with k");
  if (ocr.dims.size() != 1 || asr.dims.size() != 1) invariant("sentiment entries must be 1-D");
  f.ocr_sentiment = ocr.values;
  f.asr_sentiment = asr.values;
  f.ocr_present = ocr.present;
  f.asr_present = asr.present;
  try {
    f.validate();
  } catch (const ParameterError& err) {
    invariant(err.what());
  }
  return f;
}

void write_container(const FeatureArrays& features, const std::filesystem::path& path) {
  write_file_atomic(path, encode_container(features));
}

FeatureArrays read_container(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_container(bytes);
  } catch (const DecodeError& err) {
    throw DecodeError(err.kind(), path.string() + ": " + std::string(err.what()).substr(
                                                              decode_error_kind_name(err.kind()).size() + 2));
  }
}

}  // namespace emofuse

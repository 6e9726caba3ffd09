// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/stats.hpp"

#include <algorithm>
#include <limits>

#include "emofuse/container.hpp"
#include "emofuse/error.hpp"
#include "emofuse/io.hpp"

namespace emofuse {
namespace {

struct RangeAccumulator {
  std::vector<float> lo, hi;
  bool any = false;

  explicit RangeAccumulator(std::size_t width)
      : lo(width, std::numeric_limits<float>::infinity()), hi(width, -std::numeric_limits<float>::infinity()) {}

  void add(std::span<const float> row) {
    if (row.size() != lo.size()) {
      throw DimensionError("stats: row of width " + std::to_string(row.size()) + ", expected " +
                           std::to_string(lo.size()));
    }
    any = true;
    for (std::size_t j = 0; j < row.size(); ++j) {
      lo[j] = std::min(lo[j], row[j]);
      hi[j] = std::max(hi[j], row[j]);
    }
  }

  ChannelRange finish() const {
    if (!any) return {std::vector<float>(lo.size(), 0.0f), std::vector<float>(lo.size(), 0.0f)};
    return {lo, hi};
  }
};

void require_width(std::size_t width, const ChannelRange& range) {
  if (range.min.size() != width || range.max.size() != width) {
    throw DimensionError("normalize: " + std::to_string(width) + " channels against stats of width " +
                         std::to_string(range.min.size()));
  }
}

float normalize_value(float x, float lo, float hi) {
  if (!(hi > lo)) return kNormalizedConstant;
  const double v = (double(x) - lo) / (double(hi) - lo);
  return static_cast<float>(std::clamp(v, double(kNormalizedLow), double(kNormalizedHigh)));
}

}  // namespace

InputDims ModalityStats::dims() const {
  return InputDims{(*this)[Modality::Clip].min.size(), (*this)[Modality::Beats].min.size(),
                   (*this)[Modality::Expression].min.size(), (*this)[Modality::OcrSentiment].min.size()};
}

ModalityStats compute_stats(std::span<const VideoFeatures> videos) {
  if (videos.empty()) throw ParameterError("compute_stats: split has no videos");
  const auto dims = dims_of(videos.front().features);
  std::array<RangeAccumulator, kModalityCount> acc = {
      RangeAccumulator(dims.clip), RangeAccumulator(dims.beats), RangeAccumulator(dims.expression),
      RangeAccumulator(dims.sentiment), RangeAccumulator(dims.sentiment)};
  for (const auto& vf : videos) {
    const auto& f = vf.features;
    for (std::size_t r = 0; r < f.clip.rows; ++r) acc[0].add(f.clip.row(r));
    for (std::size_t r = 0; r < f.beats.rows; ++r) acc[1].add(f.beats.row(r));
    if (f.expression.cols != dims.expression) throw DimensionError("stats: expression width differs across videos");
    for (std::size_t r = 0; r < f.expression.rows; ++r) acc[2].add(f.expression.row(r));
    if (f.ocr_present) acc[3].add(f.ocr_sentiment);
    if (f.asr_present) acc[4].add(f.asr_sentiment);
  }
  ModalityStats stats;
  for (std::size_t m = 0; m < kModalityCount; ++m) stats.ranges[m] = acc[m].finish();
  return stats;
}

ModalityStats compute_stats(const DatasetManifest& manifest, Split split) {
  const auto videos = load_split(manifest, split);
  return compute_stats(videos);
}

Matrix normalize(const Matrix& x, const ChannelRange& range) {
  require_width(x.cols, range);
  Matrix out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t j = 0; j < x.cols; ++j)
      out.values[r * x.cols + j] = normalize_value(x.values[r * x.cols + j], range.min[j], range.max[j]);
  return out;
}

std::vector<float> normalize(std::span<const float> x, const ChannelRange& range) {
  require_width(x.size(), range);
  std::vector<float> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) out[j] = normalize_value(x[j], range.min[j], range.max[j]);
  return out;
}

Matrix denormalize(const Matrix& x, const ChannelRange& range) {
  require_width(x.cols, range);
  Matrix out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double lo = range.min[j], hi = range.max[j];
      out.values[r * x.cols + j] = static_cast<float>(lo + double(x.values[r * x.cols + j]) * (hi - lo));
    }
  }
  return out;
}

VideoFeatures normalize_video(const VideoFeatures& video, const ModalityStats& stats) {
  VideoFeatures out = video;
  auto& f = out.features;
  f.clip = normalize(video.features.clip, stats[Modality::Clip]);
  f.beats = normalize(video.features.beats, stats[Modality::Beats]);
  f.expression = normalize(video.features.expression, stats[Modality::Expression]);
  f.ocr_sentiment = f.ocr_present ? normalize(video.features.ocr_sentiment, stats[Modality::OcrSentiment])
                                  : std::vector<float>(video.features.ocr_sentiment.size(), 0.0f);
  f.asr_sentiment = f.asr_present ? normalize(video.features.asr_sentiment, stats[Modality::AsrSentiment])
                                  : std::vector<float>(video.features.asr_sentiment.size(), 0.0f);
  return out;
}

std::string encode_stats(const ModalityStats& stats) {
  std::vector<Entry> entries;
  for (auto m : kAllModalities) {
    for (const bool is_min : {true, false}) {
      Entry e;
      const auto& values = is_min ? stats[m].min : stats[m].max;
      e.name = std::string(modality_name(m)) + (is_min ? ".min" : ".max");
      e.dims = {static_cast<std::uint32_t>(values.size())};
      e.values = values;
      entries.push_back(std::move(e));
    }
  }
  return encode_entries(entries);
}

ModalityStats decode_stats(std::string_view bytes) {
  const auto entries = decode_entries(bytes);
  ModalityStats stats;
  std::array<int, kModalityCount * 2> seen{};
  for (const auto& e : entries) {
    const auto dot = e.name.rfind('.');
    if (dot == std::string::npos) {
      throw DecodeError(DecodeErrorKind::InvariantViolation, "unexpected stats entry '" + e.name + "'");
    }
    const auto suffix = e.name.substr(dot + 1);
    Modality m;
    try {
      m = parse_modality(e.name.substr(0, dot));
    } catch (const ParameterError&) {
      throw DecodeError(DecodeErrorKind::InvariantViolation, "unexpected stats entry '" + e.name + "'");
    }
    if (e.dims.size() != 1 || (suffix != "min" && suffix != "max")) {
      throw DecodeError(DecodeErrorKind::InvariantViolation, "malformed stats entry '" + e.name + "'");
    }
    const bool is_min = suffix == "min";
    ++seen[static_cast<std::size_t>(m) * 2 + (is_min ? 0 : 1)];
    (is_min ? stats[m].min : stats[m].max) = e.values;
  }
  for (auto s : seen) {
    if (s != 1) throw DecodeError(DecodeErrorKind::InvariantViolation, "stats file needs each min/max exactly once");
  }
  for (auto m : kAllModalities) {
    const auto& r = stats[m];
    if (r.min.size() != r.max.size()) {
      throw DecodeError(DecodeErrorKind::InvariantViolation, "min/max widths differ for " + std::string(modality_name(m)));
    }
    for (std::size_t j = 0; j < r.min.size(); ++j) {
      if (!(r.min[j] <= r.max[j])) {
        throw DecodeError(DecodeErrorKind::InvariantViolation, "min > max in " + std::string(modality_name(m)));
      }
    }
  }
  return stats;
}

void write_stats(const ModalityStats& stats, const std::filesystem::path& path) {
  write_file_atomic(path, encode_stats(stats));
}

ModalityStats read_stats(const std::filesystem::path& path) { return decode_stats(read_file(resolve_input_path(path))); }

std::string stats_digest(const ModalityStats& stats) { return container_digest(encode_stats(stats)); }

}  // namespace emofuse

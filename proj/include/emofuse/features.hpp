// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emofuse {

/// Ekman-6 classes, encoded alphabetically.
enum class EmotionLabel : std::uint8_t { Anger = 0, Disgust = 1, Fear = 2, Joy = 3, Sadness = 4, Surprise = 5 };

inline constexpr std::size_t kEmotionCount = 6;

std::string_view label_name(EmotionLabel label);
/// Lowercase name to label; ParameterError on anything else.
EmotionLabel parse_label(std::string_view name);
/// ParameterError unless 0 <= index < 6.
EmotionLabel label_from_index(long long index);
inline std::size_t label_index(EmotionLabel label) { return static_cast<std::size_t>(label); }

enum class Modality : std::uint8_t { Clip = 0, Beats = 1, Expression = 2, OcrSentiment = 3, AsrSentiment = 4 };

inline constexpr std::size_t kModalityCount = 5;
inline constexpr std::array<Modality, kModalityCount> kAllModalities = {
    Modality::Clip, Modality::Beats, Modality::Expression, Modality::OcrSentiment, Modality::AsrSentiment};

std::string_view modality_name(Modality m);
/// ParameterError for names outside the five known modalities.
Modality parse_modality(std::string_view name);
inline bool is_sequential(Modality m) {
  return m == Modality::Clip || m == Modality::Beats || m == Modality::Expression;
}

/// Row-major float matrix. Unlike ag::Tensor, zero rows are allowed so an
/// empty expression track has a well-defined value.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0f) {}
  Matrix(std::size_t r, std::size_t c, std::vector<float> v);

  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }

  /// Bitwise equality of shape and values.
  friend bool operator==(const Matrix& a, const Matrix& b);
};

bool bitwise_equal(std::span<const float> a, std::span<const float> b);

/// The five modality arrays of one video, as stored in a feature container.
struct FeatureArrays {
  Matrix clip;        // [N x d_clip], N >= 1
  Matrix beats;       // [N x d_beats]
  Matrix expression;  // [k x d_expr], k <= N
  std::vector<std::uint32_t> expression_frames;  // strictly increasing, < N
  std::vector<float> ocr_sentiment;
  std::vector<float> asr_sentiment;
  bool ocr_present = true;  // absent text is recorded as a zero vector
  bool asr_present = true;

  std::size_t frames() const { return clip.rows; }

  /// Throws ParameterError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const FeatureArrays& a, const FeatureArrays& b);
};

struct VideoFeatures {
  std::string video_id;
  EmotionLabel label = EmotionLabel::Anger;
  FeatureArrays features;

  friend bool operator==(const VideoFeatures& a, const VideoFeatures& b) = default;
};

/// Channel widths shared by every video in a dataset.
struct InputDims {
  std::size_t clip = 512;
  std::size_t beats = 768;
  std::size_t expression = 768;
  std::size_t sentiment = 768;

  std::size_t of(Modality m) const;
  friend bool operator==(const InputDims&, const InputDims&) = default;
};

InputDims dims_of(const FeatureArrays& f);

}  // namespace emofuse

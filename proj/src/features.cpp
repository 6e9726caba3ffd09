// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/features.hpp"

#include <cstring>

#include "emofuse/error.hpp"

namespace emofuse {
namespace {

constexpr std::array<std::string_view, kEmotionCount> kLabelNames = {"anger", "disgust", "fear",
                                                                     "joy",   "sadness", "surprise"};
constexpr std::array<std::string_view, kModalityCount> kModalityNames = {"clip", "beats", "expression",
                                                                         "ocr_sentiment", "asr_sentiment"};

}  // namespace

std::string_view label_name(EmotionLabel label) { return kLabelNames.at(label_index(label)); }

EmotionLabel parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == name) return static_cast<EmotionLabel>(i);
  }
  throw ParameterError("unknown emotion label '" + std::string(name) + "'");
}

EmotionLabel label_from_index(long long index) {
  if (index < 0 || index >= static_cast<long long>(kEmotionCount)) {
    throw ParameterError("label index " + std::to_string(index) + " out of range [0, 6)");
  }
  return static_cast<EmotionLabel>(index);
}

std::string_view modality_name(Modality m) { return kModalityNames.at(static_cast<std::size_t>(m)); }

Modality parse_modality(std::string_view name) {
  for (std::size_t i = 0; i < kModalityNames.size(); ++i) {
    if (kModalityNames[i] == name) return static_cast<Modality>(i);
  }
  throw ParameterError("unknown modality '" + std::string(name) + "'");
}

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<float> v) : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != r * c) {
    throw DimensionError("matrix " + std::to_string(r) + "x" + std::to_string(c) + " needs " +
                         std::to_string(r * c) + " values, got " + std::to_string(values.size()));
  }
}

bool bitwise_equal(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

bool operator==(const Matrix& a, const Matrix& b) {
  return a.rows == b.rows && a.cols == b.cols && bitwise_equal(a.values, b.values);
}

bool operator==(const FeatureArrays& a, const FeatureArrays& b) {
  return a.clip == b.clip && a.beats == b.beats && a.expression == b.expression &&
         a.expression_frames == b.expression_frames && bitwise_equal(a.ocr_sentiment, b.ocr_sentiment) &&
         bitwise_equal(a.asr_sentiment, b.asr_sentiment) && a.ocr_present == b.ocr_present &&
         a.asr_present == b.asr_present;
}

void FeatureArrays::validate() const {
  const auto fail = [](const std::string& what) { throw ParameterError("invalid features: " + what); };
  if (clip.rows < 1 || clip.cols < 1) fail("clip needs at least one row and one channel");
  if (beats.cols < 1) fail("beats needs at least one channel");
  if (beats.rows != clip.rows) {
    fail("clip has " + std::to_string(clip.rows) + " rows but beats has " + std::to_string(beats.rows));
  }
  if (expression.cols < 1) fail("expression needs at least one channel");
  if (expression.rows > clip.rows) {
    fail("expression has k=" + std::to_string(expression.rows) + " rows for N=" + std::to_string(clip.rows));
  }
  if (expression_frames.size() != expression.rows) fail("expression frame index count differs from k");
  for (std::size_t i = 0; i < expression_frames.size(); ++i) {
    if (expression_frames[i] >= clip.rows) fail("expression frame index out of range");
    if (i > 0 && expression_frames[i] <= expression_frames[i - 1]) {
      fail("expression frame indices must be strictly increasing");
    }
  }
  if (ocr_sentiment.empty() || ocr_sentiment.size() != asr_sentiment.size()) {
    fail("sentiment vectors must be nonempty and of equal length");
  }
  const auto all_zero = [](const std::vector<float>& v) {
    for (float x : v)
      if (x != 0.0f) return false;
    return true;
  };
  if (!ocr_present && !all_zero(ocr_sentiment)) fail("absent ocr_sentiment must be all zeros");
  if (!asr_present && !all_zero(asr_sentiment)) fail("absent asr_sentiment must be all zeros");
}

std::size_t InputDims::of(Modality m) const {
  switch (m) {
    case Modality::Clip: return clip;
    case Modality::Beats: return beats;
    case Modality::Expression: return expression;
    case Modality::OcrSentiment:
    case Modality::AsrSentiment: return sentiment;
  }
  return 0;
}

InputDims dims_of(const FeatureArrays& f) {
  return InputDims{f.clip.cols, f.beats.cols, f.expression.cols, f.ocr_sentiment.size()};
}

}  // namespace emofuse

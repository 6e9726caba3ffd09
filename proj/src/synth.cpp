// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/synth.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "emofuse/container.hpp"
#include "emofuse/error.hpp"
#include "emofuse/rng.hpp"

namespace fs = std::filesystem;

namespace emofuse {

double synth_class_mean(const SynthConfig& config, std::size_t label, std::size_t channel) {
  return channel == label ? config.margin * config.sigma / std::sqrt(2.0) : 0.0;
}

namespace {

constexpr std::size_t kSentimentProfiles = 3;
constexpr double kSentimentJitter = 0.1;

using Profiles = std::vector<std::vector<double>>;

Profiles make_profiles(Rng& rng, std::size_t width) {
  Profiles p(kSentimentProfiles, std::vector<double>(width));
  for (auto& row : p)
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  return p;
}

// Sentiment vectors are one of a few shared profiles plus jitter, drawn
// independently of the label.
void fill_sentiment(std::vector<float>& out, const Profiles& profiles, Rng& rng) {
  const auto& base = profiles[rng.below(profiles.size())];
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = static_cast<float>(base[j] + kSentimentJitter * rng.uniform(-1.0, 1.0));
}

VideoFeatures make_video(const SynthConfig& cfg, Rng& rng, std::string id, EmotionLabel label,
                         const Profiles& ocr_profiles, const Profiles& asr_profiles) {
  VideoFeatures vf;
  vf.video_id = std::move(id);
  vf.label = label;
  auto& f = vf.features;
  const std::size_t n = cfg.frames;
  f.clip = Matrix(n, cfg.dims.clip);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < cfg.dims.clip; ++j)
      f.clip.values[r * cfg.dims.clip + j] =
          static_cast<float>(synth_class_mean(cfg, label_index(label), j) + cfg.sigma * rng.normal());

  // Audio: a per-video offset shared by all chunks plus per-chunk noise.
  f.beats = Matrix(n, cfg.dims.beats);
  std::vector<double> offset(cfg.dims.beats);
  for (auto& o : offset) o = 0.5 * rng.normal();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < cfg.dims.beats; ++j)
      f.beats.values[r * cfg.dims.beats + j] = static_cast<float>(offset[j] + rng.normal());

  // Faces appear in a random subset of frames, possibly none.
  for (std::size_t r = 0; r < n; ++r)
    if (rng.uniform() < 0.6) f.expression_frames.push_back(static_cast<std::uint32_t>(r));
  f.expression = Matrix(f.expression_frames.size(), cfg.dims.expression);
  for (auto& v : f.expression.values) v = static_cast<float>(rng.normal());

  f.ocr_present = rng.uniform() < 0.7;
  f.asr_present = rng.uniform() < 0.8;
  f.ocr_sentiment.assign(cfg.dims.sentiment, 0.0f);
  f.asr_sentiment.assign(cfg.dims.sentiment, 0.0f);
  if (f.ocr_present) fill_sentiment(f.ocr_sentiment, ocr_profiles, rng);
  if (f.asr_present) fill_sentiment(f.asr_sentiment, asr_profiles, rng);
  return vf;
}

std::size_t nearest_mean(const SynthConfig& cfg, const Matrix& clip) {
  std::vector<double> centroid(clip.cols, 0.0);
  for (std::size_t r = 0; r < clip.rows; ++r)
    for (std::size_t j = 0; j < clip.cols; ++j) centroid[j] += clip.values[r * clip.cols + j];
  for (auto& c : centroid) c /= double(clip.rows);
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < kEmotionCount; ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < clip.cols; ++j) {
      const double diff = centroid[j] - synth_class_mean(cfg, c, j);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

}  // namespace

SynthDataset synth_dataset(const SynthConfig& cfg) {
  if (!(cfg.margin >= 0.0)) throw ParameterError("synth: margin must be >= 0");
  if (!(cfg.sigma > 0.0)) throw ParameterError("synth: sigma must be positive");
  if (cfg.frames == 0) throw ParameterError("synth: frames must be at least 1");
  if (cfg.dims.clip < kEmotionCount) throw ParameterError("synth: clip width must be at least 6");
  if (cfg.dims.beats == 0 || cfg.dims.expression == 0 || cfg.dims.sentiment == 0) {
    throw ParameterError("synth: dims must be positive");
  }
  SynthDataset out;
  Rng rng(cfg.seed);
  Rng profile_rng = rng.split();
  const auto ocr_profiles = make_profiles(profile_rng, cfg.dims.sentiment);
  const auto asr_profiles = make_profiles(profile_rng, cfg.dims.sentiment);
  std::size_t correct = 0;
  for (const Split split : {Split::Train, Split::Test}) {
    const std::size_t per_class = split == Split::Train ? cfg.videos_per_class : cfg.test_per_class;
    for (std::size_t c = 0; c < kEmotionCount; ++c) {
      for (std::size_t i = 0; i < per_class; ++i) {
        char id[64];
        std::snprintf(id, sizeof id, "%s_%s_%04zu", std::string(label_name(static_cast<EmotionLabel>(c))).c_str(),
                      std::string(split_name(split)).c_str(), i);
        Rng video_rng = rng.split();
        auto vf = make_video(cfg, video_rng, id, static_cast<EmotionLabel>(c), ocr_profiles, asr_profiles);
        correct += nearest_mean(cfg, vf.features.clip) == c ? 1 : 0;
        out.manifest.rows.push_back({vf.video_id, vf.label, split, "videos/" + vf.video_id + ".vmf"});
        out.videos.push_back(std::move(vf));
      }
    }
  }
  out.oracle_accuracy = out.videos.empty() ? 0.0 : double(correct) / double(out.videos.size());
  return out;
}

void write_synth_dataset(const SynthDataset& data, const fs::path& dir) {
  fs::create_directories(dir / "videos");
  for (std::size_t i = 0; i < data.videos.size(); ++i) {
    write_container(data.videos[i].features, dir / data.manifest.rows[i].path);
  }
  DatasetManifest m = data.manifest;
  m.base_dir = dir;
  write_manifest(m, dir / "manifest.csv");
}

}  // namespace emofuse

// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "emofuse/model.hpp"
#include "emofuse/stats.hpp"

namespace emofuse {

/// Mean over the batch of -log(max(p[i, label_i], 1e-12)). `probs` is [b x C].
template <typename T>
ag::Tensor<T> cross_entropy(ag::Graph<T>& g, const ag::Tensor<T>& probs, std::span<const std::size_t> labels);

inline constexpr double kProbabilityFloor = 1e-12;

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
template <typename T>
class Adam {
 public:
  Adam(std::vector<ag::Tensor<T>> params, AdamConfig config);

  /// Applies one update from the gradients currently stored in the params.
  /// Throws NonFiniteError naming the tensor and element on a NaN/Inf gradient.
  void step();

  std::uint64_t steps() const { return steps_; }
  const std::vector<std::vector<T>>& first_moment() const { return m_; }
  const std::vector<std::vector<T>>& second_moment() const { return v_; }

 private:
  std::vector<ag::Tensor<T>> params_;
  AdamConfig config_;
  std::vector<std::vector<T>> m_, v_;
  std::uint64_t steps_ = 0;
};

/// Rescales all gradients so their joint L2 norm is at most max_norm.
template <typename T>
void clip_grad_norm(std::span<ag::Tensor<T>> params, double max_norm);

struct TrainConfig {
  std::size_t batch_size = 32;
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t max_epochs = 200;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;  // 0 disables clipping

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

template <typename T>
struct TrainResult {
  FusionModelParams<T> best_params;
  FusionModelParams<T> final_params;  // state when training stopped
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  std::vector<EpochRecord> history;
  std::uint64_t steps = 0;
};

/// Trains from raw (unnormalized) videos. Each epoch shuffles the training
/// set, draws Random frame positions per video, and runs batched
/// forward/backward/Adam (the last partial batch is kept). Validation uses
/// Equidistant frames with dropout off. Training stops once `patience`
/// epochs pass without a strictly better validation accuracy; the
/// parameters of the best epoch are returned.
template <typename T>
TrainResult<T> train(std::span<const VideoFeatures> train_set, std::span<const VideoFeatures> val_set,
                     const ModalityStats& stats, const ModelConfig& model_config, const TrainConfig& train_config);

struct Prediction {
  std::string video_id;
  std::size_t label = 0;
  std::size_t predicted = 0;
  std::vector<double> probs;
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<Prediction> predictions;  // input order
};

/// Equidistant frames at config.frames, normalized with `stats`, Inference mode.
VideoFeatures prepare_for_inference(const VideoFeatures& raw, const ModalityStats& stats, const ModelConfig& config);

template <typename T>
Prediction predict(const FusionModelParams<T>& params, const ModelConfig& config, const ModalityStats& stats,
                   const VideoFeatures& video);

/// Scores every video; `threads` > 1 spreads videos over a worker pool.
/// Results do not depend on the thread count.
template <typename T>
EvalResult evaluate(const FusionModelParams<T>& params, const ModelConfig& config, const ModalityStats& stats,
                    std::span<const VideoFeatures> videos, std::size_t threads = 1);

}  // namespace emofuse

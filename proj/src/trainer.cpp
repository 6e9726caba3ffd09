// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "emofuse/error.hpp"
#include "emofuse/sampling.hpp"

namespace emofuse {

template <typename T>
ag::Tensor<T> cross_entropy(ag::Graph<T>& g, const ag::Tensor<T>& probs, std::span<const std::size_t> labels) {
  if (probs.ndim() != 2) throw DimensionError("cross_entropy: probabilities must be [b x C]");
  const std::size_t b = probs.dim(0), c = probs.dim(1);
  if (labels.size() != b) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(b) +
                         " rows");
  }
  for (auto l : labels) {
    if (l >= c) throw ParameterError("cross_entropy: label " + std::to_string(l) + " out of range");
  }
  const auto p = probs.data();
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) total -= std::log(std::max(double(p[i * c + labels[i]]), kProbabilityFloor));
  const double loss = total / double(b);
  std::vector<std::size_t> picked(labels.begin(), labels.end());
  return g.emit("cross_entropy", {}, {static_cast<T>(loss)}, {&probs},
                [pi = probs.impl(), picked = std::move(picked), b, c](const ag::TensorImpl<T>& out) {
                  const double upstream = out.grad[0];
                  for (std::size_t i = 0; i < b; ++i) {
                    const double pv = pi->data[i * c + picked[i]];
                    if (pv > kProbabilityFloor) pi->grad[i * c + picked[i]] += static_cast<T>(-upstream / (double(b) * pv));
                  }
                });
}

template <typename T>
Adam<T>::Adam(std::vector<ag::Tensor<T>> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.lr > 0.0)) throw ConfigError("Adam: learning rate must be positive");
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw UsageError("Adam: parameter without gradient buffer");
    m_.emplace_back(p.size(), T(0));
    v_.emplace_back(p.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto grad = params_[k].grad();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        std::ostringstream os;
        os << "Adam: non-finite gradient " << grad[i] << " in parameter tensor " << k << " at element " << i
           << " (step " << steps_ + 1 << ")";
        throw NonFiniteError(os.str());
      }
    }
  }
  ++steps_;
  const double t = double(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto theta = params_[k].mutable_data();
    const auto grad = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = grad[i];
      const double mi = config_.beta1 * double(m[i]) + (1.0 - config_.beta1) * gi;
      const double vi = config_.beta2 * double(v[i]) + (1.0 - config_.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double m_hat = mi / correction1;
      const double v_hat = vi / correction2;
      theta[i] = static_cast<T>(double(theta[i]) - config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
    }
    ag::check_finite<T>(theta, "Adam update");
  }
}

template <typename T>
void clip_grad_norm(std::span<ag::Tensor<T>> params, double max_norm) {
  if (!(max_norm > 0.0)) return;
  double sq = 0.0;
  for (const auto& p : params)
    for (auto gv : p.grad()) sq += double(gv) * gv;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double factor = max_norm / norm;
  for (auto& p : params)
    for (auto& gv : p.mutable_grad()) gv = static_cast<T>(gv * factor);
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (patience == 0) throw ConfigError("patience must be at least 1");
  if (max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
}

VideoFeatures prepare_for_inference(const VideoFeatures& raw, const ModalityStats& stats, const ModelConfig& config) {
  const auto idx = sample_indices(raw.features.frames(), config.frames, SamplingMode::Equidistant);
  return select_frames(normalize_video(raw, stats), idx);
}

template <typename T>
Prediction predict(const FusionModelParams<T>& params, const ModelConfig& config, const ModalityStats& stats,
                   const VideoFeatures& video) {
  const auto prepared = prepare_for_inference(video, stats, config);
  ag::Graph<T> g(ag::Mode::Inference);
  const auto probs = forward<T>(g, std::span<const VideoFeatures>(&prepared, 1), params, config);
  Prediction p;
  p.video_id = video.video_id;
  p.label = label_index(video.label);
  p.probs.assign(probs.data().begin(), probs.data().end());
  p.predicted = argmax<T>(probs.data());
  return p;
}

template <typename T>
EvalResult evaluate(const FusionModelParams<T>& params, const ModelConfig& config, const ModalityStats& stats,
                    std::span<const VideoFeatures> videos, std::size_t threads) {
  if (videos.empty()) throw ParameterError("evaluate: no videos to score");
  EvalResult result;
  result.predictions.resize(videos.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, videos.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < videos.size(); ++i) result.predictions[i] = predict(params, config, stats, videos[i]);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < videos.size(); i += workers)
            result.predictions[i] = predict(params, config, stats, videos[i]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::size_t correct = 0;
  for (const auto& p : result.predictions) correct += p.predicted == p.label ? 1 : 0;
  result.accuracy = double(correct) / double(videos.size());
  return result;
}

template <typename T>
TrainResult<T> train(std::span<const VideoFeatures> train_set, std::span<const VideoFeatures> val_set,
                     const ModalityStats& stats, const ModelConfig& model_config, const TrainConfig& tc) {
  model_config.validate();
  tc.validate();
  if (train_set.empty()) throw ParameterError("train: training split is empty");
  if (val_set.empty()) throw ParameterError("train: validation split is empty");

  Rng rng(tc.seed);
  auto params = init_params<T>(model_config, rng.next_u64());
  auto tensors = params.tensors();
  Adam<T> adam(tensors, AdamConfig{tc.lr, tc.beta1, tc.beta2, tc.eps});

  std::vector<VideoFeatures> normalized;
  normalized.reserve(train_set.size());
  for (const auto& v : train_set) normalized.push_back(normalize_video(v, stats));

  TrainResult<T> result;
  result.best_val_accuracy = -1.0;
  std::size_t stale_epochs = 0;
  std::vector<std::size_t> order(normalized.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      std::vector<VideoFeatures> batch;
      std::vector<std::size_t> labels;
      for (std::size_t i = start; i < end; ++i) {
        const auto& video = normalized[order[i]];
        const auto idx = sample_indices(video.features.frames(), model_config.frames, SamplingMode::Random, &rng);
        batch.push_back(select_frames(video, idx));
        labels.push_back(label_index(video.label));
      }
      params.zero_grad();
      ag::Graph<T> g(ag::Mode::Training, &rng);
      const auto probs = forward<T>(g, batch, params, model_config);
      const auto loss = cross_entropy<T>(g, probs, labels);
      if (!std::isfinite(loss.item())) throw NonFiniteError("train: non-finite loss at epoch " + std::to_string(epoch));
      g.backward(loss);
      clip_grad_norm<T>(tensors, tc.clip_norm);
      adam.step();
      loss_sum += double(loss.item()) * double(end - start);
    }
    const double val_acc = evaluate<T>(params, model_config, stats, val_set).accuracy;
    result.history.push_back({epoch, loss_sum / double(order.size()), val_acc});
    if (val_acc > result.best_val_accuracy) {
      result.best_val_accuracy = val_acc;
      result.best_epoch = epoch;
      result.best_params = params.clone();
      stale_epochs = 0;
    } else if (++stale_epochs >= tc.patience) {
      break;
    }
  }
  result.final_params = params.clone();
  result.steps = adam.steps();
  return result;
}

#define EMOFUSE_INSTANTIATE_TRAINER(T)                                                                          \
  template ag::Tensor<T> cross_entropy<T>(ag::Graph<T>&, const ag::Tensor<T>&, std::span<const std::size_t>);   \
  template class Adam<T>;                                                                                       \
  template void clip_grad_norm<T>(std::span<ag::Tensor<T>>, double);                                            \
  template TrainResult<T> train<T>(std::span<const VideoFeatures>, std::span<const VideoFeatures>,              \
                                   const ModalityStats&, const ModelConfig&, const TrainConfig&);               \
  template Prediction predict<T>(const FusionModelParams<T>&, const ModelConfig&, const ModalityStats&,         \
                                 const VideoFeatures&);                                                         \
  template EvalResult evaluate<T>(const FusionModelParams<T>&, const ModelConfig&, const ModalityStats&,        \
                                  std::span<const VideoFeatures>, std::size_t);

EMOFUSE_INSTANTIATE_TRAINER(float)
EMOFUSE_INSTANTIATE_TRAINER(double)

#undef EMOFUSE_INSTANTIATE_TRAINER

}  // namespace emofuse

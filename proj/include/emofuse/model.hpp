// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emofuse/features.hpp"
#include "emofuse/ops.hpp"
#include "emofuse/tensor.hpp"

namespace emofuse {

/// One cross-attention module: queries from `query`, keys/values from `key_value`.
struct Pairing {
  Modality query;
  Modality key_value;

  friend bool operator==(const Pairing&, const Pairing&) = default;
};

/// (clip <- beats), (beats <- clip), (expression <- clip).
std::vector<Pairing> default_pairings();
/// "clip:beats,beats:clip,expression:clip"
std::string format_pairings(std::span<const Pairing> pairings);
std::vector<Pairing> parse_pairings(std::string_view text);

struct ModelConfig {
  std::size_t d = 512;
  std::size_t heads = 4;
  double dropout_p = 0.5;
  std::size_t frames = 16;  // n, frames sampled per video
  std::size_t class_count = kEmotionCount;
  std::vector<Pairing> pairings = default_pairings();
  InputDims dims;

  /// Throws ConfigError. Each of clip, beats and expression must be the
  /// query of exactly one pairing, and a pairing never attends to itself.
  void validate() const;
  std::size_t fused_width() const { return pairings.size() * d + 2 * dims.sentiment; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct AttentionParams {
  ag::Tensor<T> w_q, b_q;  // [d_q_in x d], [d]
  ag::Tensor<T> w_k, b_k;  // [d_kv_in x d], [d]
  ag::Tensor<T> w_v, b_v;  // [d_kv_in x d], [d]
  ag::Tensor<T> w_o, b_o;  // [d x d], [d]
  ag::Tensor<T> ln_gamma, ln_beta;  // [d]
};

template <typename T>
struct FusionModelParams {
  std::vector<AttentionParams<T>> attention;  // one per pairing
  ag::Tensor<T> w_cls, b_cls;                 // [(P d + 2 d_sent) x C], [C]

  /// Handles in a fixed order ("pair0.w_q", ..., "head.w", "head.b"); they
  /// share storage with this object.
  std::vector<std::pair<std::string, ag::Tensor<T>>> named() const;
  std::vector<ag::Tensor<T>> tensors() const;
  FusionModelParams clone() const;
  void zero_grad();
};

/// Weights ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases 0;
/// layer-norm gamma 1, beta 0. Values are drawn in double from Rng(seed),
/// so float and double builds agree up to rounding. Throws ConfigError.
template <typename T>
FusionModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

/// Exact number of trainable scalars.
template <typename T>
std::size_t param_count(const FusionModelParams<T>& params);
/// Same count from the configuration alone.
std::size_t param_count(const ModelConfig& config);

template <typename To, typename From>
FusionModelParams<To> cast_params(const FusionModelParams<From>& params);

/// Intermediate values of one cross-attention call.
template <typename T>
struct AttentionTrace {
  ag::Tensor<T> query;      // Q = q_seq W_Q + b_Q, the residual path
  ag::Tensor<T> mixed;      // concatenated per-head attention outputs
  ag::Tensor<T> projected;  // mixed W_O + b_O, before dropout
  ag::Tensor<T> output;     // layer_norm(Q + dropout(projected))
};

/// Multi-head scaled dot-product cross-attention with post layer norm:
/// per head h of width d/heads, A_h = softmax(Q_h K_h^T / sqrt(d/heads))
/// with masked key rows excluded; output [t_q x d].
template <typename T>
AttentionTrace<T> cross_attention_trace(ag::Graph<T>& g, const ag::Tensor<T>& query_seq,
                                        const ag::Tensor<T>& kv_seq, const ag::Mask& kv_mask,
                                        const AttentionParams<T>& params, std::size_t heads, double dropout_p);

template <typename T>
ag::Tensor<T> cross_attention(ag::Graph<T>& g, const ag::Tensor<T>& query_seq, const ag::Tensor<T>& kv_seq,
                              const ag::Mask& kv_mask, const AttentionParams<T>& params, std::size_t heads,
                              double dropout_p);

/// Sequence tensor fed to attention for one modality; an empty expression
/// track becomes a single zero row.
template <typename T>
ag::Tensor<T> modality_sequence(const FeatureArrays& features, Modality m);

/// Class probabilities [b x C] for videos that are already sampled and
/// normalized. Each video is fused independently, so a row never depends
/// on the rest of the batch.
template <typename T>
ag::Tensor<T> forward(ag::Graph<T>& g, std::span<const VideoFeatures> batch, const FusionModelParams<T>& params,
                      const ModelConfig& config);

/// argmax with ties going to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> values);

}  // namespace emofuse

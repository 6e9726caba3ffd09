// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "emofuse/error.hpp"
#include "emofuse/rng.hpp"

namespace emofuse {

std::vector<Pairing> default_pairings() {
  return {{Modality::Clip, Modality::Beats}, {Modality::Beats, Modality::Clip}, {Modality::Expression, Modality::Clip}};
}

std::string format_pairings(std::span<const Pairing> pairings) {
  std::string out;
  for (const auto& p : pairings) {
    if (!out.empty()) out.push_back(',');
    out += std::string(modality_name(p.query)) + ':' + std::string(modality_name(p.key_value));
  }
  return out;
}

std::vector<Pairing> parse_pairings(std::string_view text) {
  std::vector<Pairing> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("pairing '" + std::string(item) + "' must look like query:key_value");
    }
    try {
      out.push_back({parse_modality(item.substr(0, colon)), parse_modality(item.substr(colon + 1))});
    } catch (const ParameterError& err) {
      throw ConfigError(std::string("bad pairing: ") + err.what());
    }
    start = end + 1;
  }
  return out;
}

void ModelConfig::validate() const {
  if (d == 0 || heads == 0) throw ConfigError("d and heads must be positive");
  if (d % heads != 0) {
    throw ConfigError("d=" + std::to_string(d) + " is not divisible by heads=" + std::to_string(heads));
  }
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (frames == 0) throw ConfigError("frames must be at least 1");
  if (class_count != kEmotionCount) throw ConfigError("class_count must be 6");
  if (dims.clip == 0 || dims.beats == 0 || dims.expression == 0 || dims.sentiment == 0) {
    throw ConfigError("input dims must be positive");
  }
  std::array<int, kModalityCount> as_query{};
  for (const auto& p : pairings) {
    if (!is_sequential(p.query) || !is_sequential(p.key_value)) {
      throw ConfigError("pairings may only use clip, beats and expression");
    }
    if (p.query == p.key_value) throw ConfigError("a pairing must join two different modalities");
    ++as_query[static_cast<std::size_t>(p.query)];
  }
  for (auto m : {Modality::Clip, Modality::Beats, Modality::Expression}) {
    if (as_query[static_cast<std::size_t>(m)] != 1) {
      throw ConfigError("modality '" + std::string(modality_name(m)) + "' must be the query of exactly one pairing");
    }
  }
}

template <typename T>
std::vector<std::pair<std::string, ag::Tensor<T>>> FusionModelParams<T>::named() const {
  std::vector<std::pair<std::string, ag::Tensor<T>>> out;
  for (std::size_t i = 0; i < attention.size(); ++i) {
    const auto& a = attention[i];
    const std::string p = "pair" + std::to_string(i) + ".";
    out.emplace_back(p + "w_q", a.w_q);
    out.emplace_back(p + "b_q", a.b_q);
    out.emplace_back(p + "w_k", a.w_k);
    out.emplace_back(p + "b_k", a.b_k);
    out.emplace_back(p + "w_v", a.w_v);
    out.emplace_back(p + "b_v", a.b_v);
    out.emplace_back(p + "w_o", a.w_o);
    out.emplace_back(p + "b_o", a.b_o);
    out.emplace_back(p + "ln_gamma", a.ln_gamma);
    out.emplace_back(p + "ln_beta", a.ln_beta);
  }
  out.emplace_back("head.w", w_cls);
  out.emplace_back("head.b", b_cls);
  return out;
}

template <typename T>
std::vector<ag::Tensor<T>> FusionModelParams<T>::tensors() const {
  std::vector<ag::Tensor<T>> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

template <typename T>
FusionModelParams<T> FusionModelParams<T>::clone() const {
  FusionModelParams out;
  for (const auto& a : attention) {
    out.attention.push_back({a.w_q.clone(), a.b_q.clone(), a.w_k.clone(), a.b_k.clone(), a.w_v.clone(),
                             a.b_v.clone(), a.w_o.clone(), a.b_o.clone(), a.ln_gamma.clone(), a.ln_beta.clone()});
  }
  out.w_cls = w_cls.clone();
  out.b_cls = b_cls.clone();
  return out;
}

template <typename T>
void FusionModelParams<T>::zero_grad() {
  for (auto& t : tensors()) t.zero_grad();
}

namespace {

template <typename T>
ag::Tensor<T> xavier(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(6.0 / double(fan_in + fan_out));
  std::vector<T> v(fan_in * fan_out);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-a, a));
  return ag::Tensor<T>({fan_in, fan_out}, std::move(v), true);
}

template <typename T>
ag::Tensor<T> filled(std::size_t n, T value) {
  return ag::Tensor<T>({n}, std::vector<T>(n, value), true);
}

}  // namespace

template <typename T>
FusionModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.d;
  FusionModelParams<T> p;
  for (const auto& pairing : config.pairings) {
    const std::size_t q_in = config.dims.of(pairing.query);
    const std::size_t kv_in = config.dims.of(pairing.key_value);
    AttentionParams<T> a;
    a.w_q = xavier<T>(rng, q_in, d);
    a.b_q = filled<T>(d, T(0));
    a.w_k = xavier<T>(rng, kv_in, d);
    a.b_k = filled<T>(d, T(0));
    a.w_v = xavier<T>(rng, kv_in, d);
    a.b_v = filled<T>(d, T(0));
    a.w_o = xavier<T>(rng, d, d);
    a.b_o = filled<T>(d, T(0));
    a.ln_gamma = filled<T>(d, T(1));
    a.ln_beta = filled<T>(d, T(0));
    p.attention.push_back(std::move(a));
  }
  p.w_cls = xavier<T>(rng, config.fused_width(), config.class_count);
  p.b_cls = filled<T>(config.class_count, T(0));
  return p;
}

template <typename T>
std::size_t param_count(const FusionModelParams<T>& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params.named()) n += t.size();
  return n;
}

std::size_t param_count(const ModelConfig& config) {
  const std::size_t d = config.d;
  std::size_t n = 0;
  for (const auto& p : config.pairings) {
    const std::size_t q_in = config.dims.of(p.query), kv_in = config.dims.of(p.key_value);
    n += q_in * d + 2 * kv_in * d + d * d;  // W_Q, W_K, W_V, W_O
    n += 4 * d + 2 * d;                     // four biases, gamma, beta
  }
  n += config.fused_width() * config.class_count + config.class_count;
  return n;
}

template <typename To, typename From>
FusionModelParams<To> cast_params(const FusionModelParams<From>& params) {
  const auto convert = [](const ag::Tensor<From>& t) {
    std::vector<To> v(t.data().begin(), t.data().end());
    return ag::Tensor<To>(t.shape(), std::move(v), t.requires_grad());
  };
  FusionModelParams<To> out;
  for (const auto& a : params.attention) {
    out.attention.push_back({convert(a.w_q), convert(a.b_q), convert(a.w_k), convert(a.b_k), convert(a.w_v),
                             convert(a.b_v), convert(a.w_o), convert(a.b_o), convert(a.ln_gamma),
                             convert(a.ln_beta)});
  }
  out.w_cls = convert(params.w_cls);
  out.b_cls = convert(params.b_cls);
  return out;
}

template <typename T>
AttentionTrace<T> cross_attention_trace(ag::Graph<T>& g, const ag::Tensor<T>& query_seq,
                                        const ag::Tensor<T>& kv_seq, const ag::Mask& kv_mask,
                                        const AttentionParams<T>& params, std::size_t heads, double dropout_p) {
  if (query_seq.ndim() != 2 || kv_seq.ndim() != 2) throw DimensionError("cross_attention: sequences must be 2-D");
  const std::size_t d = params.w_o.dim(0);
  if (heads == 0 || d % heads != 0) throw ConfigError("cross_attention: d not divisible by heads");
  if (kv_mask.size() != kv_seq.dim(0)) throw DimensionError("cross_attention: mask length differs from t_kv");
  if (std::none_of(kv_mask.begin(), kv_mask.end(), [](auto m) { return m != 0; })) {
    throw DegenerateInputError("cross_attention: every key/value row is masked");
  }
  const std::size_t width = d / heads;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(double(width)));

  AttentionTrace<T> trace;
  trace.query = ag::add_row(g, ag::matmul(g, query_seq, params.w_q), params.b_q);
  const auto keys = ag::add_row(g, ag::matmul(g, kv_seq, params.w_k), params.b_k);
  const auto values = ag::add_row(g, ag::matmul(g, kv_seq, params.w_v), params.b_v);

  std::vector<ag::Tensor<T>> per_head;
  per_head.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto q_h = ag::slice_cols(g, trace.query, h * width, (h + 1) * width);
    const auto k_h = ag::slice_cols(g, keys, h * width, (h + 1) * width);
    const auto v_h = ag::slice_cols(g, values, h * width, (h + 1) * width);
    const auto scores = ag::scale(g, ag::matmul(g, q_h, ag::transpose(g, k_h)), inv_sqrt);
    const auto weights = ag::masked_softmax(g, scores, kv_mask);
    per_head.push_back(ag::matmul(g, weights, v_h));
  }
  trace.mixed = ag::concat_cols<T>(g, per_head);
  trace.projected = ag::add_row(g, ag::matmul(g, trace.mixed, params.w_o), params.b_o);
  const auto dropped = ag::dropout(g, trace.projected, dropout_p);
  trace.output = ag::layer_norm(g, ag::add(g, trace.query, dropped), params.ln_gamma, params.ln_beta);
  return trace;
}

template <typename T>
ag::Tensor<T> cross_attention(ag::Graph<T>& g, const ag::Tensor<T>& query_seq, const ag::Tensor<T>& kv_seq,
                              const ag::Mask& kv_mask, const AttentionParams<T>& params, std::size_t heads,
                              double dropout_p) {
  return cross_attention_trace(g, query_seq, kv_seq, kv_mask, params, heads, dropout_p).output;
}

template <typename T>
ag::Tensor<T> modality_sequence(const FeatureArrays& f, Modality m) {
  const Matrix* x = nullptr;
  switch (m) {
    case Modality::Clip: x = &f.clip; break;
    case Modality::Beats: x = &f.beats; break;
    case Modality::Expression: x = &f.expression; break;
    default: throw ParameterError("modality '" + std::string(modality_name(m)) + "' is not a sequence");
  }
  if (x->rows == 0) return ag::Tensor<T>::zeros({1, x->cols});
  return ag::Tensor<T>({x->rows, x->cols}, std::vector<T>(x->values.begin(), x->values.end()));
}

template <typename T>
ag::Tensor<T> forward(ag::Graph<T>& g, std::span<const VideoFeatures> batch, const FusionModelParams<T>& params,
                      const ModelConfig& config) {
  if (batch.empty()) throw ParameterError("forward: empty batch");
  if (params.attention.size() != config.pairings.size()) {
    throw DimensionError("forward: parameters hold " + std::to_string(params.attention.size()) +
                         " attention modules, config lists " + std::to_string(config.pairings.size()));
  }
  std::vector<ag::Tensor<T>> fused;
  fused.reserve(batch.size());
  for (const auto& video : batch) {
    const auto& f = video.features;
    if (dims_of(f) != config.dims) {
      throw DimensionError("forward: video '" + video.video_id + "' channel dims do not match the model");
    }
    std::vector<ag::Tensor<T>> parts;
    for (std::size_t i = 0; i < config.pairings.size(); ++i) {
      const auto& pairing = config.pairings[i];
      const auto q = modality_sequence<T>(f, pairing.query);
      const auto kv = modality_sequence<T>(f, pairing.key_value);
      const auto attended =
          cross_attention(g, q, kv, ag::Mask(kv.dim(0), 1), params.attention[i], config.heads, config.dropout_p);
      parts.push_back(ag::mean_pool(g, attended));
    }
    parts.emplace_back(ag::Shape{f.ocr_sentiment.size()},
                       std::vector<T>(f.ocr_sentiment.begin(), f.ocr_sentiment.end()));
    parts.emplace_back(ag::Shape{f.asr_sentiment.size()},
                       std::vector<T>(f.asr_sentiment.begin(), f.asr_sentiment.end()));
    fused.push_back(ag::concat<T>(g, parts));
  }
  const auto stacked = ag::stack_rows<T>(g, fused);
  const auto logits = ag::add_row(g, ag::matmul(g, stacked, params.w_cls), params.b_cls);
  return ag::softmax(g, logits);
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

#define EMOFUSE_INSTANTIATE_MODEL(T)                                                                           \
  template struct FusionModelParams<T>;                                                                        \
  template FusionModelParams<T> init_params<T>(const ModelConfig&, std::uint64_t);                             \
  template std::size_t param_count<T>(const FusionModelParams<T>&);                                            \
  template AttentionTrace<T> cross_attention_trace<T>(ag::Graph<T>&, const ag::Tensor<T>&, const ag::Tensor<T>&, \
                                                      const ag::Mask&, const AttentionParams<T>&, std::size_t,  \
                                                      double);                                                  \
  template ag::Tensor<T> cross_attention<T>(ag::Graph<T>&, const ag::Tensor<T>&, const ag::Tensor<T>&,         \
                                            const ag::Mask&, const AttentionParams<T>&, std::size_t, double);  \
  template ag::Tensor<T> modality_sequence<T>(const FeatureArrays&, Modality);                                 \
  template ag::Tensor<T> forward<T>(ag::Graph<T>&, std::span<const VideoFeatures>, const FusionModelParams<T>&, \
                                    const ModelConfig&);                                                        \
  template std::size_t argmax<T>(std::span<const T>);

EMOFUSE_INSTANTIATE_MODEL(float)
EMOFUSE_INSTANTIATE_MODEL(double)

#undef EMOFUSE_INSTANTIATE_MODEL

template FusionModelParams<double> cast_params<double, float>(const FusionModelParams<float>&);
template FusionModelParams<float> cast_params<float, double>(const FusionModelParams<double>&);
template FusionModelParams<float> cast_params<float, float>(const FusionModelParams<float>&);
template FusionModelParams<double> cast_params<double, double>(const FusionModelParams<double>&);

}  // namespace emofuse

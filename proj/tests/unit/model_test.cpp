// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "emofuse/checkpoint.hpp"
#include "emofuse/container.hpp"
#include "emofuse/error.hpp"
#include "emofuse/model.hpp"
#include "emofuse/verification.hpp"
#include "test_util.hpp"

namespace emofuse {
namespace {

using testing::random_features;
using testing::random_tensor;
using testing::TempDir;
using TD = ag::Tensor<double>;

ModelConfig tiny() { return GradCheckSuiteConfig::tiny_model(); }

AttentionParams<double> random_attention(Rng& rng, std::size_t q_in, std::size_t kv_in, std::size_t d) {
  AttentionParams<double> p;
  p.w_q = random_tensor<double>(rng, {q_in, d});
  p.b_q = random_tensor<double>(rng, {d});
  p.w_k = random_tensor<double>(rng, {kv_in, d});
  p.b_k = random_tensor<double>(rng, {d});
  p.w_v = random_tensor<double>(rng, {kv_in, d});
  p.b_v = random_tensor<double>(rng, {d});
  p.w_o = random_tensor<double>(rng, {d, d});
  p.b_o = random_tensor<double>(rng, {d});
  p.ln_gamma = random_tensor<double>(rng, {d}, false, 0.5, 1.5);
  p.ln_beta = random_tensor<double>(rng, {d});
  return p;
}

// Straight-line loops for one attention call, dropout off.
std::vector<double> attention_oracle(const TD& q_seq, const TD& kv_seq, const AttentionParams<double>& p,
                                     std::size_t heads) {
  const std::size_t tq = q_seq.dim(0), tkv = kv_seq.dim(0), qin = q_seq.dim(1), kvin = kv_seq.dim(1);
  const std::size_t d = p.w_o.dim(0), w = d / heads;
  const auto project = [](const TD& x, const TD& wt, const TD& b, std::size_t rows, std::size_t in, std::size_t out) {
    std::vector<double> y(rows * out);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < out; ++j) {
        double s = b.at(j);
        for (std::size_t k = 0; k < in; ++k) s += x.at(r * in + k) * wt.at(k * out + j);
        y[r * out + j] = s;
      }
    return y;
  };
  const auto q = project(q_seq, p.w_q, p.b_q, tq, qin, d);
  const auto k = project(kv_seq, p.w_k, p.b_k, tkv, kvin, d);
  const auto v = project(kv_seq, p.w_v, p.b_v, tkv, kvin, d);
  std::vector<double> mixed(tq * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < tq; ++i) {
      std::vector<double> s(tkv);
      double mx = -1e300;
      for (std::size_t j = 0; j < tkv; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < w; ++c) dot += q[i * d + h * w + c] * k[j * d + h * w + c];
        s[j] = dot / std::sqrt(double(w));
        mx = std::max(mx, s[j]);
      }
      double z = 0.0;
      for (auto& x : s) z += (x = std::exp(x - mx));
      for (std::size_t j = 0; j < tkv; ++j)
        for (std::size_t c = 0; c < w; ++c) mixed[i * d + h * w + c] += s[j] / z * v[j * d + h * w + c];
    }
  std::vector<double> out(tq * d);
  for (std::size_t i = 0; i < tq; ++i) {
    std::vector<double> r(d);
    for (std::size_t j = 0; j < d; ++j) {
      double s = p.b_o.at(j);
      for (std::size_t c = 0; c < d; ++c) s += mixed[i * d + c] * p.w_o.at(c * d + j);
      r[j] = q[i * d + j] + s;
    }
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / double(d);
    double var = 0.0;
    for (double x : r) var += (x - mean) * (x - mean);
    var /= double(d);
    for (std::size_t j = 0; j < d; ++j)
      out[i * d + j] = (r[j] - mean) / std::sqrt(var + 1e-5) * p.ln_gamma.at(j) + p.ln_beta.at(j);
  }
  return out;
}

TD permute_rows(const TD& x, const std::vector<std::size_t>& perm) {
  const std::size_t cols = x.dim(1);
  std::vector<double> v(x.size());
  for (std::size_t r = 0; r < perm.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = x.at(perm[r] * cols + c);
  return TD(x.shape(), v);
}

TEST(Attention, MatchesLoopOracleAtTinySize) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_attention(rng, 3, 5, 4);
    const auto q = random_tensor<double>(rng, {2, 3});
    const auto kv = random_tensor<double>(rng, {3, 5});
    ag::Graph<double> g(ag::Mode::Inference);
    const auto out = cross_attention(g, q, kv, ag::Mask(3, 1), p, 2, 0.0);
    const auto expect = attention_oracle(q, kv, p, 2);
    ASSERT_EQ(out.shape(), (ag::Shape{2, 4}));
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(out.at(i), expect[i], 1e-12);
  }
}

TEST(Attention, SingleKeyRowGivesSameMixForEveryQuery) {
  Rng rng(2);
  const auto p = random_attention(rng, 4, 4, 8);
  const auto q = random_tensor<double>(rng, {5, 4}, false, -10, 10);
  const auto kv = random_tensor<double>(rng, {1, 4});
  ag::Graph<double> g(ag::Mode::Inference);
  const auto trace = cross_attention_trace(g, q, kv, ag::Mask{1}, p, 2, 0.0);
  // W_O applied to the single value row.
  std::vector<double> v(8), expect(8);
  for (std::size_t j = 0; j < 8; ++j) {
    v[j] = p.b_v.at(j);
    for (std::size_t k = 0; k < 4; ++k) v[j] += kv.at(k) * p.w_v.at(k * 8 + j);
  }
  for (std::size_t j = 0; j < 8; ++j) {
    expect[j] = p.b_o.at(j);
    for (std::size_t c = 0; c < 8; ++c) expect[j] += v[c] * p.w_o.at(c * 8 + j);
  }
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(trace.projected.at(r * 8 + j), expect[j], 1e-12);
}

TEST(Attention, KeyValuePermutationInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_attention(rng, 4, 6, 8);
    const auto q = random_tensor<double>(rng, {3, 4});
    const std::size_t tkv = 2 + rng.below(6);
    const auto kv = random_tensor<double>(rng, {tkv, 6});
    std::vector<std::size_t> perm(tkv);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm.begin(), perm.end());
    ag::Graph<double> g(ag::Mode::Inference);
    const auto a = cross_attention(g, q, kv, ag::Mask(tkv, 1), p, 2, 0.0);
    const auto b = cross_attention(g, q, permute_rows(kv, perm), ag::Mask(tkv, 1), p, 2, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.at(i), b.at(i), 1e-5);
  }
}

TEST(Attention, AppendedMaskedRowIsNoOp) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_attention(rng, 4, 6, 8);
    const auto q = random_tensor<double>(rng, {3, 4});
    const std::size_t tkv = 1 + rng.below(5);
    const auto kv = random_tensor<double>(rng, {tkv, 6});
    std::vector<double> padded(kv.data().begin(), kv.data().end());
    for (int c = 0; c < 6; ++c) padded.push_back(rng.uniform(-50, 50));
    ag::Mask mask(tkv + 1, 1);
    mask.back() = 0;
    ag::Graph<double> g(ag::Mode::Inference);
    const auto a = cross_attention(g, q, kv, ag::Mask(tkv, 1), p, 2, 0.0);
    const auto b = cross_attention(g, q, TD({tkv + 1, 6}, padded), mask, p, 2, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a.at(i), b.at(i), 1e-6);
  }
}

TEST(Attention, QueryPermutationIsEquivariant) {
  Rng rng(5);
  const auto p = random_attention(rng, 4, 4, 8);
  const auto q = random_tensor<double>(rng, {4, 4});
  const auto kv = random_tensor<double>(rng, {3, 4});
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  ag::Graph<double> g(ag::Mode::Inference);
  const auto a = cross_attention(g, q, kv, ag::Mask(3, 1), p, 2, 0.0);
  const auto b = cross_attention(g, permute_rows(q, perm), kv, ag::Mask(3, 1), p, 2, 0.0);
  const auto a_perm = permute_rows(a, perm);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a_perm.at(i), b.at(i), 1e-12);
  const auto pa = ag::mean_pool(g, a), pb = ag::mean_pool(g, b);
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_NEAR(pa.at(i), pb.at(i), 1e-5);
}

TEST(Attention, AllRowsMaskedIsDegenerate) {
  Rng rng(6);
  const auto p = random_attention(rng, 2, 2, 4);
  ag::Graph<double> g(ag::Mode::Inference);
  EXPECT_THROW(cross_attention(g, random_tensor<double>(rng, {1, 2}), random_tensor<double>(rng, {2, 2}),
                               ag::Mask{0, 0}, p, 2, 0.0),
               DegenerateInputError);
}

VideoFeatures tiny_video(Rng& rng, const ModelConfig& c, std::string id) {
  VideoFeatures v;
  v.video_id = std::move(id);
  v.features = random_features(rng, c.frames, c.dims);
  return v;
}

TEST(Forward, OutputsAreDistributions) {
  Rng rng(7);
  const auto c = tiny();
  const auto params = init_params<float>(c, 1);
  std::vector<VideoFeatures> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(tiny_video(rng, c, "v" + std::to_string(i)));
  ag::Graph<float> g(ag::Mode::Inference);
  const auto probs = forward<float>(g, batch, params, c);
  ASSERT_EQ(probs.shape(), (ag::Shape{5, 6}));
  for (std::size_t r = 0; r < 5; ++r) {
    double total = 0.0;
    for (std::size_t k = 0; k < 6; ++k) total += probs.at(r * 6 + k);
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Forward, IdenticalVideosGiveIdenticalOutputs) {
  Rng rng(8);
  const auto c = tiny();
  const auto params = init_params<float>(c, 2);
  const auto v = tiny_video(rng, c, "a");
  const std::vector<VideoFeatures> batch{v, v};
  ag::Graph<float> g(ag::Mode::Inference);
  const auto probs = forward<float>(g, batch, params, c);
  EXPECT_TRUE(bitwise_equal(probs.data().subspan(0, 6), probs.data().subspan(6, 6)));
}

TEST(Forward, BatchOfOneMatchesBatchOfEight) {
  Rng rng(9);
  const auto c = tiny();
  const auto params = init_params<float>(c, 3);
  std::vector<VideoFeatures> batch;
  for (int i = 0; i < 8; ++i) batch.push_back(tiny_video(rng, c, "v" + std::to_string(i)));
  ag::Graph<float> g(ag::Mode::Inference);
  const auto all = forward<float>(g, batch, params, c);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto one = forward<float>(g, std::span<const VideoFeatures>(&batch[i], 1), params, c);
    for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(one.at(k), all.at(i * 6 + k), 1e-6);
  }
}

TEST(Forward, EmptyExpressionTrackIsAccepted) {
  Rng rng(10);
  const auto c = tiny();
  const auto params = init_params<float>(c, 4);
  auto v = tiny_video(rng, c, "silent");
  v.features.expression = Matrix(0, c.dims.expression);
  v.features.expression_frames.clear();
  ag::Graph<float> g(ag::Mode::Inference);
  const auto probs = forward<float>(g, std::span<const VideoFeatures>(&v, 1), params, c);
  EXPECT_NEAR(std::accumulate(probs.data().begin(), probs.data().end(), 0.0), 1.0, 1e-6);
}

TEST(Forward, DimensionMismatchRejected) {
  Rng rng(11);
  const auto c = tiny();
  const auto params = init_params<float>(c, 5);
  VideoFeatures v;
  v.features = random_features(rng, c.frames, InputDims{8, 8, 8, 9});
  ag::Graph<float> g(ag::Mode::Inference);
  EXPECT_THROW(forward<float>(g, std::span<const VideoFeatures>(&v, 1), params, c), DimensionError);
}

TEST(InitParams, DeterministicUnderSeed) {
  const auto c = tiny();
  const auto a = init_params<float>(c, 42), b = init_params<float>(c, 42), other = init_params<float>(c, 43);
  const auto na = a.named(), nb = b.named(), no = other.named();
  bool any_differs = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    EXPECT_TRUE(bitwise_equal(na[i].second.data(), nb[i].second.data())) << na[i].first;
    any_differs = any_differs || !bitwise_equal(na[i].second.data(), no[i].second.data());
  }
  EXPECT_TRUE(any_differs);
}

TEST(InitParams, GammaOnesBiasesZeroWeightsInXavierRange) {
  const auto c = tiny();
  const auto p = init_params<float>(c, 1);
  for (const auto& a : p.attention) {
    for (float v : a.ln_gamma.data()) EXPECT_EQ(v, 1.0f);
    for (float v : a.ln_beta.data()) EXPECT_EQ(v, 0.0f);
    for (float v : a.b_q.data()) EXPECT_EQ(v, 0.0f);
    const double bound = std::sqrt(6.0 / 16.0);
    for (float v : a.w_q.data()) EXPECT_LE(std::abs(v), bound);
  }
}

TEST(InitParams, HeadsMustDivideD) {
  auto c = tiny();
  c.heads = 3;
  EXPECT_THROW(init_params<float>(c, 1), ConfigError);
}

TEST(ParamCount, TinyClosedForm) {
  const auto c = tiny();
  // Per pairing: 4 matrices of 8x8, 4 biases and gamma/beta of 8.
  const std::size_t per_pair = 4 * 8 * 8 + 6 * 8;
  const std::size_t head = (3 * 8 + 2 * 8) * 6 + 6;
  EXPECT_EQ(param_count(init_params<float>(c, 1)), 3 * per_pair + head);
  EXPECT_EQ(param_count(c), 3 * per_pair + head);
}

TEST(ParamCount, DoublingSentimentWidthOnlyGrowsHead) {
  auto c = tiny();
  const auto before = param_count(init_params<float>(c, 1));
  const std::size_t delta = c.dims.sentiment;
  c.dims.sentiment *= 2;
  EXPECT_EQ(param_count(init_params<float>(c, 1)) - before, 2 * delta * 6);
}

TEST(ParamCount, DefaultConfigMatchesTally) {
  const ModelConfig c;
  const std::size_t d = 512;
  const std::size_t expected = (512 * d + 2 * 768 * d + d * d + 6 * d) +
                               2 * (768 * d + 2 * 512 * d + d * d + 6 * d) + (3 * d + 2 * 768) * 6 + 6;
  EXPECT_EQ(param_count(c), expected);
  EXPECT_EQ(expected, 3697670u);
}

TEST(ModelConfig, ValidationRules) {
  auto c = tiny();
  c.pairings = parse_pairings("clip:beats,beats:clip");
  EXPECT_THROW(c.validate(), ConfigError);
  c.pairings = parse_pairings("clip:clip,beats:clip,expression:clip");
  EXPECT_THROW(c.validate(), ConfigError);
  c.pairings = parse_pairings("clip:expression,beats:expression,expression:beats");
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(parse_pairings("clip-beats"), ConfigError);
  c.pairings = parse_pairings("clip:ocr_sentiment,beats:clip,expression:clip");
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(format_pairings(default_pairings()), "clip:beats,beats:clip,expression:clip");
}

TEST(Argmax, TiesGoToLowestIndex) {
  const std::vector<float> v{0.2f, 0.4f, 0.4f, 0.0f};
  EXPECT_EQ(argmax<float>(v), 1u);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
  auto c = tiny();
  c.pairings = parse_pairings("clip:expression,beats:expression,expression:beats");
  Checkpoint ck{c, init_params<float>(c, 9), 1234, "deadbeef", 17, 0.75};
  TempDir tmp;
  write_checkpoint(ck, tmp / "ck.vmf");
  const auto back = read_checkpoint(tmp / "ck.vmf");
  EXPECT_EQ(back.config, c);
  EXPECT_EQ(back.seed, 1234u);
  EXPECT_EQ(back.stats_digest, "deadbeef");
  EXPECT_EQ(back.best_epoch, 17u);
  EXPECT_EQ(back.best_val_accuracy, 0.75);
  const auto a = ck.params.named(), b = back.params.named();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(a[i].second.shape(), b[i].second.shape());
    EXPECT_TRUE(bitwise_equal(a[i].second.data(), b[i].second.data()));
  }
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ck));
}

TEST(Checkpoint, CorruptionDetected) {
  const auto c = tiny();
  auto bytes = encode_checkpoint(Checkpoint{c, init_params<float>(c, 1), 1, "x", 1, 0.5});
  bytes[bytes.size() - 10] ^= 1;
  EXPECT_THROW(decode_checkpoint(bytes), DecodeError);
}

}  // namespace
}  // namespace emofuse

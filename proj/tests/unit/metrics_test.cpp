// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "emofuse/error.hpp"
#include "emofuse/metrics.hpp"
#include "emofuse/io.hpp"
#include "emofuse/synth.hpp"
#include "test_util.hpp"

namespace emofuse {
namespace {

TEST(Confusion, MatchesCountingOracle) {
  Rng rng(2);
  std::vector<std::size_t> predicted(300), truth(300);
  for (std::size_t i = 0; i < 300; ++i) {
    truth[i] = rng.below(6);
    predicted[i] = rng.uniform() < 0.6 ? truth[i] : rng.below(6);
  }
  const auto cm = confusion(predicted, truth);
  for (std::size_t t = 0; t < 6; ++t) {
    std::size_t row_total = 0;
    for (std::size_t p = 0; p < 6; ++p) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < 300; ++i) n += (truth[i] == t && predicted[i] == p) ? 1 : 0;
      EXPECT_EQ(cm.count(t, p), n);
      row_total += n;
    }
    double row_rate = 0.0;
    for (std::size_t p = 0; p < 6; ++p) {
      EXPECT_DOUBLE_EQ(cm.rate(t, p), double(cm.count(t, p)) / double(row_total));
      row_rate += cm.rate(t, p);
    }
    EXPECT_NEAR(row_rate, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(cm.recall(t), cm.rate(t, t));
  }
  EXPECT_EQ(cm.total(), 300u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), accuracy(predicted, truth));
}

TEST(Accuracy, IdenticalAndDisjoint) {
  const std::vector<std::size_t> a{0, 1, 2, 3}, b{1, 2, 3, 4};
  EXPECT_EQ(accuracy(a, a), 1.0);
  EXPECT_EQ(accuracy(a, b), 0.0);
}

TEST(Accuracy, LengthMismatchRejected) {
  const std::vector<std::size_t> a{0, 1}, b{0};
  EXPECT_THROW(accuracy(a, b), ParameterError);
}

TEST(Confusion, EmptyTrueClassRowStaysZero) {
  const std::vector<std::size_t> predicted{0, 0, 1}, truth{0, 1, 1};
  const auto cm = confusion(predicted, truth);
  for (std::size_t p = 0; p < 6; ++p) EXPECT_EQ(cm.rate(4, p), 0.0);
  EXPECT_DOUBLE_EQ(cm.precision(0), 0.5);
  EXPECT_DOUBLE_EQ(cm.recall(1), 0.5);
}

TEST(Report, JsonAndCsvShapes) {
  const std::vector<std::size_t> predicted{0, 1, 2, 3, 4, 5, 0}, truth{0, 1, 2, 3, 4, 5, 5};
  auto r = make_report(predicted, truth);
  r.split = "test";
  r.model_config = R"({"d":8})";
  const auto j = report_to_json(r);
  EXPECT_EQ(j.at("accuracy_percent"), "85.71");
  EXPECT_EQ(j.at("samples"), 7);
  EXPECT_EQ(j.at("model_config").at("d"), 8);
  EXPECT_EQ(j.at("confusion_normalized").size(), 6u);
  const auto csv = confusion_csv(r.confusion);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_NE(csv.find("surprise,0.500000,0.000000"), std::string::npos) << csv;
  EXPECT_NE(format_report_table(r).find("accuracy: 85.71%"), std::string::npos);
}

TEST(Synth, SeparableOracleIsPerfect) {
  SynthConfig sc;
  sc.videos_per_class = 10;
  sc.margin = 10.0;
  const auto data = synth_dataset(sc);
  EXPECT_EQ(data.videos.size(), 60u);
  EXPECT_EQ(data.oracle_accuracy, 1.0);
}

TEST(Synth, ZeroMarginIsChanceLevel) {
  SynthConfig sc;
  sc.videos_per_class = 100;
  sc.margin = 0.0;
  sc.seed = 3;
  const auto data = synth_dataset(sc);
  EXPECT_NEAR(data.oracle_accuracy, 1.0 / 6.0, 0.1);
}

TEST(Synth, SameSeedSameFiles) {
  SynthConfig sc;
  sc.videos_per_class = 2;
  sc.test_per_class = 1;
  testing::TempDir a, b;
  write_synth_dataset(synth_dataset(sc), a.path());
  write_synth_dataset(synth_dataset(sc), b.path());
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(read_file(entry.path()), read_file(b.path() / rel)) << rel;
  }
}

TEST(Synth, InvalidConfigRejected) {
  SynthConfig sc;
  sc.margin = -1;
  EXPECT_THROW(synth_dataset(sc), ParameterError);
  sc = SynthConfig{};
  sc.dims.clip = 5;
  EXPECT_THROW(synth_dataset(sc), ParameterError);
}

}  // namespace
}  // namespace emofuse

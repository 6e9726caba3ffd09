// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/verification.hpp"

#include "emofuse/grad_check.hpp"
#include "emofuse/sampling.hpp"
#include "emofuse/stats.hpp"
#include "emofuse/synth.hpp"
#include "emofuse/trainer.hpp"

namespace emofuse {

ModelConfig GradCheckSuiteConfig::tiny_model() {
  ModelConfig c;
  c.d = 8;
  c.heads = 2;
  c.frames = 4;
  c.dropout_p = 0.0;
  c.dims = InputDims{8, 8, 8, 8};
  return c;
}

GradCheckSuiteResult run_gradcheck_suite(const GradCheckSuiteConfig& cfg) {
  SynthConfig sc;
  sc.videos_per_class = 1;
  sc.frames = cfg.model.frames + 2;
  sc.dims = cfg.model.dims;
  sc.margin = 2.0;
  sc.seed = cfg.seed;
  const auto data = synth_dataset(sc);
  const auto stats = compute_stats(data.videos);

  std::vector<VideoFeatures> batch;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < cfg.batch && i < data.videos.size(); ++i) {
    batch.push_back(prepare_for_inference(data.videos[i], stats, cfg.model));
    labels.push_back(label_index(data.videos[i].label));
  }

  const auto params = init_params<double>(cfg.model, cfg.seed);
  const std::function<ag::Tensor<double>(ag::Graph<double>&)> loss = [&](ag::Graph<double>& g) {
    return cross_entropy<double>(g, forward<double>(g, batch, params, cfg.model), labels);
  };

  GradCheckSuiteResult result;
  result.passed = true;
  for (const auto& [name, tensor] : params.named()) {
    const auto report = ag::grad_check<double>(loss, tensor, cfg.eps, cfg.tol);
    result.entries.push_back({name, report.checked, report.max_rel_error, report.passed});
    result.passed = result.passed && report.passed;
  }
  return result;
}

}  // namespace emofuse

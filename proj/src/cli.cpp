// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "emofuse/checkpoint.hpp"
#include "emofuse/container.hpp"
#include "emofuse/error.hpp"
#include "emofuse/io.hpp"
#include "emofuse/manifest.hpp"
#include "emofuse/metrics.hpp"
#include "emofuse/stats.hpp"
#include "emofuse/synth.hpp"
#include "emofuse/trainer.hpp"
#include "emofuse/verification.hpp"

namespace fs = std::filesystem;

namespace emofuse {
namespace {

struct Options {
  std::string manifest, stats, checkpoint, out, blacklist, container, split = "test", pairing, dims = "8,8,8,8";
  std::uint64_t seed = 0;
  std::size_t n = 16, batch_size = 32, heads = 4, dim = 512, patience = 5, max_epochs = 200, threads = 1;
  std::size_t videos_per_class = 10, test_per_class = 0, frames = 0;
  double lr = 1e-5, dropout = 0.5, val_fraction = 0.1, clip_norm = 0.0, margin = 10.0, eps = 1e-3, tol = 1e-4;
};

std::string format_g(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

InputDims parse_dims(const std::string& text) {
  std::vector<std::size_t> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw ParameterError("--dims expects four comma-separated integers, got '" + text + "'");
    }
  }
  if (v.size() != 4) throw ParameterError("--dims expects clip,beats,expression,sentiment");
  return InputDims{v[0], v[1], v[2], v[3]};
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
}

ModalityStats stats_for(const Options& o, const Checkpoint& ck) {
  fs::path path = o.stats;
  if (path.empty()) path = fs::path(o.checkpoint).parent_path() / "stats.vmf";
  const auto stats = read_stats(path);
  if (!ck.stats_digest.empty() && stats_digest(stats) != ck.stats_digest) {
    throw ParameterError("stats file '" + path.string() + "' (digest " + stats_digest(stats) +
                         ") is not the one this checkpoint was trained with (" + ck.stats_digest + ")");
  }
  return stats;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const auto manifest = read_manifest(o.manifest);
  const auto split = parse_split(o.split);
  const auto stats = compute_stats(manifest, split);
  write_stats(stats, o.out);
  const auto d = stats.dims();
  out << "stats over " << manifest.count(split) << " " << split_name(split) << " videos: dims clip=" << d.clip
      << " beats=" << d.beats << " expression=" << d.expression << " sentiment=" << d.sentiment << "\n"
      << "digest " << stats_digest(stats) << " -> " << o.out << "\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  auto manifest = read_manifest(o.manifest);
  if (manifest.count(Split::Validation) == 0) manifest = carve_validation(manifest, o.val_fraction, o.seed);
  const auto train_videos = load_split(manifest, Split::Train);
  const auto val_videos = load_split(manifest, Split::Validation);
  if (train_videos.empty()) throw ParameterError("train: manifest has no train rows");

  const bool computed_stats = o.stats.empty();
  const auto stats = computed_stats ? compute_stats(train_videos) : read_stats(o.stats);

  ModelConfig mc;
  mc.d = o.dim;
  mc.heads = o.heads;
  mc.dropout_p = o.dropout;
  mc.frames = o.n;
  if (!o.pairing.empty()) mc.pairings = parse_pairings(o.pairing);
  mc.dims = dims_of(train_videos.front().features);
  if (stats.dims() != mc.dims) throw DimensionError("stats dims do not match the training features");
  mc.validate();

  TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.lr = o.lr;
  tc.patience = o.patience;
  tc.max_epochs = o.max_epochs;
  tc.seed = o.seed;
  tc.clip_norm = o.clip_norm;

  const auto result = train<float>(train_videos, val_videos, stats, mc, tc);

  Checkpoint ck{mc, result.best_params, o.seed, stats_digest(stats), result.best_epoch, result.best_val_accuracy};
  std::string history = "epoch,train_loss,val_accuracy\n";
  for (const auto& e : result.history) {
    history += std::to_string(e.epoch) + ',' + format_g(e.train_loss) + ',' + format_g(e.val_accuracy) + '\n';
  }
  const auto checkpoint_bytes = encode_checkpoint(ck);
  const fs::path dir = o.out;
  prepare_out_dir(dir);
  write_file_atomic(dir / "checkpoint.vmf", checkpoint_bytes);
  write_file_atomic(dir / "history.csv", history);
  if (computed_stats) write_stats(stats, dir / "stats.vmf");

  out << "trained on " << train_videos.size() << " videos, validated on " << val_videos.size() << "\n"
      << "parameters: " << param_count(result.best_params) << "\n"
      << "epochs run: " << result.history.size() << ", best epoch " << result.best_epoch << " with validation accuracy "
      << format_g(100.0 * result.best_val_accuracy, 4) << "%\n"
      << "wrote " << (dir / "checkpoint.vmf").string() << "\n";
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto ck = read_checkpoint(o.checkpoint);
  const auto stats = stats_for(o, ck);
  const auto manifest_path = resolve_input_path(o.manifest);
  const auto manifest = read_manifest(manifest_path);
  const auto split = parse_split(o.split);
  const auto videos = load_split(manifest, split);
  const auto result = evaluate<float>(ck.params, ck.config, stats, videos, o.threads);

  std::vector<std::size_t> predicted, truth;
  std::string predictions = "video_id,label,predicted";
  for (std::size_t c = 0; c < kEmotionCount; ++c) predictions += ",p_" + std::string(label_name(static_cast<EmotionLabel>(c)));
  predictions += '\n';
  for (const auto& p : result.predictions) {
    predicted.push_back(p.predicted);
    truth.push_back(p.label);
    predictions += p.video_id + ',' + std::string(label_name(static_cast<EmotionLabel>(p.label))) + ',' +
                   std::string(label_name(static_cast<EmotionLabel>(p.predicted)));
    for (double prob : p.probs) predictions += ',' + format_g(prob);
    predictions += '\n';
  }
  auto report = make_report(predicted, truth);
  report.split = std::string(split_name(split));
  report.seed = ck.seed;
  for (const Split s : {Split::Train, Split::Validation, Split::Test}) {
    report.split_sizes[std::string(split_name(s))] = manifest.count(s);
  }
  report.checkpoint_digest = container_digest(read_file(resolve_input_path(o.checkpoint)));
  report.stats_digest = stats_digest(stats);
  report.manifest_digest = hex32(crc32(read_file(manifest_path)));
  report.model_config = config_to_json(ck.config).dump();

  const fs::path dir = o.out;
  const auto json = report_to_json(report).dump(2) + "\n";
  prepare_out_dir(dir);
  write_file_atomic(dir / "report.json", json);
  write_file_atomic(dir / "confusion.csv", confusion_csv(report.confusion));
  write_file_atomic(dir / "predictions.csv", predictions);
  out << format_report_table(report);
  return 0;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const auto ck = read_checkpoint(o.checkpoint);
  const auto stats = stats_for(o, ck);
  const fs::path path = resolve_input_path(o.container);
  VideoFeatures video;
  video.video_id = path.stem().string();
  video.features = read_container(path);
  const auto p = predict<float>(ck.params, ck.config, stats, video);
  out << "video: " << video.video_id << "\n"
      << "predicted: " << label_name(static_cast<EmotionLabel>(p.predicted)) << "\n";
  for (std::size_t c = 0; c < p.probs.size(); ++c) {
    out << label_name(static_cast<EmotionLabel>(c)) << ' ' << format_g(p.probs[c]) << "\n";
  }
  if (!o.out.empty()) {
    nlohmann::json j = {{"video_id", video.video_id},
                        {"predicted", label_name(static_cast<EmotionLabel>(p.predicted))},
                        {"probabilities", p.probs}};
    write_file_atomic(o.out, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_clean(const Options& o, std::ostream& out, std::ostream& err) {
  const auto manifest = read_manifest(o.manifest);
  const auto blacklist = read_blacklist(o.blacklist);
  const auto result = apply_blacklist(manifest, blacklist);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  write_manifest(result.manifest, o.out);
  out << "removed " << result.removed_train << " train / " << result.removed_test << " test";
  if (result.removed_validation > 0) out << " / " << result.removed_validation << " validation";
  out << "\n"
      << "kept " << result.manifest.count(Split::Train) << " train / " << result.manifest.count(Split::Test)
      << " test\n";
  return 0;
}

int cmd_split_app(const Options& o, std::ostream& out, std::ostream& err) {
  const auto manifest = read_manifest(o.manifest);
  const auto result = build_app_split(manifest);
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  write_manifest(result.manifest, o.out);
  for (std::size_t c = 0; c < kEmotionCount; ++c) {
    std::size_t train_count = 0, val_count = 0;
    for (const auto& r : result.manifest.rows) {
      if (label_index(r.label) != c) continue;
      (r.split == Split::Train ? train_count : val_count) += 1;
    }
    out << label_name(static_cast<EmotionLabel>(c)) << ": " << train_count << " train / " << val_count
        << " validation\n";
  }
  return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig sc;
  sc.videos_per_class = o.videos_per_class;
  sc.test_per_class = o.test_per_class;
  sc.frames = o.frames == 0 ? o.n : o.frames;
  sc.dims = parse_dims(o.dims);
  sc.margin = o.margin;
  sc.seed = o.seed;
  const auto data = synth_dataset(sc);
  write_synth_dataset(data, o.out);
  out << "wrote " << data.videos.size() << " videos (" << data.manifest.count(Split::Train) << " train / "
      << data.manifest.count(Split::Test) << " test) to " << o.out << "\n"
      << "nearest-mean oracle accuracy: " << format_g(100.0 * data.oracle_accuracy, 4) << "%\n";
  return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  GradCheckSuiteConfig cfg;
  cfg.seed = o.seed;
  cfg.eps = o.eps;
  cfg.tol = o.tol;
  const auto result = run_gradcheck_suite(cfg);
  char line[160];
  for (const auto& e : result.entries) {
    std::snprintf(line, sizeof line, "%-16s %6zu  max rel err %.3e  %s\n", e.name.c_str(), e.elements,
                  e.max_rel_error, e.passed ? "PASS" : "FAIL");
    out << line;
  }
  out << "gradcheck: " << (result.passed ? "PASS" : "FAIL") << " (" << result.entries.size()
      << " parameter tensors, tol " << format_g(cfg.tol, 3) << ")\n";
  return result.passed ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal video emotion classifier: training, evaluation and dataset tools", "emofuse"};
  app.require_subcommand(1);
  Options o;

  auto* stats = app.add_subcommand("stats", "Compute per-channel min/max statistics over a split");
  stats->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  stats->add_option("--out", o.out, "Output stats file")->required();
  stats->add_option("--split", o.split, "Split to scan")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train the fusion classifier");
  train_cmd->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  train_cmd->add_option("--stats", o.stats, "Stats file (default: computed from the train split)");
  train_cmd->add_option("--out", o.out, "Output directory")->required();
  train_cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--n", o.n, "Frames sampled per video")->capture_default_str();
  train_cmd->add_option("--batch-size", o.batch_size, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--dropout", o.dropout, "Dropout probability")->capture_default_str();
  train_cmd->add_option("--heads", o.heads, "Attention heads")->capture_default_str();
  train_cmd->add_option("--dim", o.dim, "Common attention dimension d")->capture_default_str();
  train_cmd->add_option("--patience", o.patience, "Epochs without improvement before stopping")->capture_default_str();
  train_cmd->add_option("--pairing", o.pairing, "Comma list of query:key_value modality pairs");
  train_cmd->add_option("--max-epochs", o.max_epochs, "Upper bound on epochs")->capture_default_str();
  train_cmd->add_option("--val-fraction", o.val_fraction, "Share of train carved out for validation")
      ->capture_default_str();
  train_cmd->add_option("--clip-norm", o.clip_norm, "Gradient norm clip (0 = off)")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Score a split and write report.json / confusion.csv");
  eval_cmd->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--stats", o.stats, "Stats file (default: stats.vmf next to the checkpoint)");
  eval_cmd->add_option("--split", o.split, "Split to score")->capture_default_str();
  eval_cmd->add_option("--out", o.out, "Output directory")->required();
  eval_cmd->add_option("--threads", o.threads, "Worker threads")->capture_default_str();

  auto* predict_cmd = app.add_subcommand("predict", "Classify one feature container");
  predict_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--stats", o.stats, "Stats file (default: stats.vmf next to the checkpoint)");
  predict_cmd->add_option("container", o.container, "Feature container (.vmf)")->required();
  predict_cmd->add_option("--out", o.out, "Optional JSON output file");

  auto* clean = app.add_subcommand("clean", "Remove blacklisted videos from a manifest");
  clean->add_option("--manifest", o.manifest, "Dataset manifest CSV")->required();
  clean->add_option("--blacklist", o.blacklist, "Blacklist text file, one id per line")->required();
  clean->add_option("--out", o.out, "Output manifest")->required();

  auto* split_app = app.add_subcommand("split-app", "Per-class alphabetical 95/5 train/validation split");
  split_app->add_option("--manifest", o.manifest, "Cleaned dataset manifest CSV")->required();
  split_app->add_option("--out", o.out, "Output manifest")->required();

  auto* synth = app.add_subcommand("synth", "Generate a separable synthetic dataset");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--videos-per-class", o.videos_per_class, "Train videos per class")->capture_default_str();
  synth->add_option("--test-per-class", o.test_per_class, "Test videos per class")->capture_default_str();
  synth->add_option("--n", o.n, "Frames per video")->capture_default_str();
  synth->add_option("--frames", o.frames, "Stored frames per video (default: --n)");
  synth->add_option("--dims", o.dims, "clip,beats,expression,sentiment widths")->capture_default_str();
  synth->add_option("--margin", o.margin, "Class-mean separation in units of sigma")->capture_default_str();

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every parameter at a tiny config");
  gradcheck->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  gradcheck->add_option("--eps", o.eps, "Central-difference step")->capture_default_str();
  gradcheck->add_option("--tol", o.tol, "Max relative error")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*stats) return cmd_stats(o, out);
    if (*train_cmd) return cmd_train(o, out);
    if (*eval_cmd) return cmd_eval(o, out);
    if (*predict_cmd) return cmd_predict(o, out);
    if (*clean) return cmd_clean(o, out, err);
    if (*split_app) return cmd_split_app(o, out, err);
    if (*synth) return cmd_synth(o, out);
    if (*gradcheck) return cmd_gradcheck(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace emofuse

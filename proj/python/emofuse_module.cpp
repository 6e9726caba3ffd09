// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "emofuse/checkpoint.hpp"
#include "emofuse/cli.hpp"
#include "emofuse/container.hpp"
#include "emofuse/manifest.hpp"
#include "emofuse/sampling.hpp"
#include "emofuse/stats.hpp"
#include "emofuse/synth.hpp"
#include "emofuse/trainer.hpp"
#include "emofuse/verification.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace emofuse;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const Matrix& m) {
  py::array_t<float> a({m.rows, m.cols});
  std::copy(m.values.begin(), m.values.end(), a.mutable_data());
  return a;
}

py::array_t<float> to_numpy(const std::vector<float>& v) {
  py::array_t<float> a(v.size());
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Matrix to_matrix(const FloatArray& a, const char* name) {
  if (a.ndim() != 2) throw DimensionError(std::string(name) + " must be a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
  return Matrix(rows, cols, std::vector<float>(a.data(), a.data() + rows * cols));
}

std::vector<float> to_vector(const FloatArray& a) { return std::vector<float>(a.data(), a.data() + a.size()); }

py::dict features_to_dict(const FeatureArrays& f) {
  py::dict d;
  d["clip"] = to_numpy(f.clip);
  d["beats"] = to_numpy(f.beats);
  d["expression"] = to_numpy(f.expression);
  d["expression_frames"] = f.expression_frames;
  d["ocr_sentiment"] = f.ocr_present ? py::object(to_numpy(f.ocr_sentiment)) : py::none();
  d["asr_sentiment"] = f.asr_present ? py::object(to_numpy(f.asr_sentiment)) : py::none();
  return d;
}

std::vector<float> sentiment_from(const py::dict& d, const char* key, std::size_t width, bool& present) {
  present = d.contains(key) && !d[key].is_none();
  if (!present) return std::vector<float>(width, 0.0f);
  return to_vector(d[key].cast<FloatArray>());
}

FeatureArrays dict_to_features(const py::dict& d) {
  FeatureArrays f;
  f.clip = to_matrix(d["clip"].cast<FloatArray>(), "clip");
  f.beats = to_matrix(d["beats"].cast<FloatArray>(), "beats");
  f.expression = to_matrix(d["expression"].cast<FloatArray>(), "expression");
  f.expression_frames = d["expression_frames"].cast<std::vector<std::uint32_t>>();
  std::size_t width = 0;
  for (const char* key : {"ocr_sentiment", "asr_sentiment"}) {
    if (d.contains(key) && !d[key].is_none()) width = static_cast<std::size_t>(d[key].cast<FloatArray>().size());
  }
  if (width == 0 && d.contains("sentiment_dim")) width = d["sentiment_dim"].cast<std::size_t>();
  f.ocr_sentiment = sentiment_from(d, "ocr_sentiment", width, f.ocr_present);
  f.asr_sentiment = sentiment_from(d, "asr_sentiment", width, f.asr_present);
  f.validate();
  return f;
}

py::dict stats_to_dict(const ModalityStats& s) {
  py::dict d;
  for (auto m : kAllModalities) {
    d[py::str(std::string(modality_name(m)))] = py::make_tuple(to_numpy(s[m].min), to_numpy(s[m].max));
  }
  return d;
}

py::dict prediction_to_dict(const Prediction& p) {
  py::dict d;
  d["video_id"] = p.video_id;
  d["predicted"] = std::string(label_name(static_cast<EmotionLabel>(p.predicted)));
  py::dict probs;
  for (std::size_t c = 0; c < p.probs.size(); ++c) probs[py::str(std::string(label_name(static_cast<EmotionLabel>(c))))] = p.probs[c];
  d["probabilities"] = probs;
  return d;
}

// A trained checkpoint plus the stats it was trained with.
class Classifier {
 public:
  Classifier(const fs::path& checkpoint, std::optional<fs::path> stats)
      : ck_(read_checkpoint(checkpoint)),
        stats_(read_stats(stats.value_or(checkpoint.parent_path() / "stats.vmf"))) {
    if (!ck_.stats_digest.empty() && stats_digest(stats_) != ck_.stats_digest) {
      throw ParameterError("stats digest " + stats_digest(stats_) + " does not match the checkpoint (" +
                           ck_.stats_digest + ")");
    }
  }

  py::dict predict(const py::object& features, std::string video_id) const {
    VideoFeatures v;
    if (py::isinstance<py::dict>(features)) {
      v.features = dict_to_features(features.cast<py::dict>());
    } else {
      const fs::path path = features.cast<fs::path>();
      v.features = read_container(path);
      if (video_id.empty()) video_id = path.stem().string();
    }
    v.video_id = std::move(video_id);
    return prediction_to_dict(emofuse::predict<float>(ck_.params, ck_.config, stats_, v));
  }

  double evaluate(const fs::path& manifest, const std::string& split, std::size_t threads) const {
    const auto videos = load_split(read_manifest(manifest), parse_split(split));
    return emofuse::evaluate<float>(ck_.params, ck_.config, stats_, videos, threads).accuracy;
  }

  std::size_t parameters() const { return param_count(ck_.params); }
  std::string config_json() const { return config_to_json(ck_.config).dump(); }
  std::size_t best_epoch() const { return ck_.best_epoch; }

 private:
  Checkpoint ck_;
  ModalityStats stats_;
};

}  // namespace

PYBIND11_MODULE(_emofuse, m) {
  m.doc() = "Multimodal video emotion classifier core";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception<DecodeError>(m, "DecodeError", base);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<ParameterError>(m, "ParameterError", base);

  m.attr("LABELS") = [] {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kEmotionCount; ++c) names.emplace_back(label_name(static_cast<EmotionLabel>(c)));
    return names;
  }();

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command line; returns (exit_code, stdout, stderr).");

  m.def(
      "read_container", [](const fs::path& path) { return features_to_dict(read_container(path)); }, py::arg("path"),
      "Reads a feature container into a dict of float32 arrays; absent sentiment is None.");
  m.def(
      "write_container",
      [](const fs::path& path, const py::dict& features) { write_container(dict_to_features(features), path); },
      py::arg("path"), py::arg("features"));
  m.def(
      "encode_container", [](const py::dict& features) { return py::bytes(encode_container(dict_to_features(features))); },
      py::arg("features"));
  m.def(
      "decode_container", [](const py::bytes& data) { return features_to_dict(decode_container(std::string(data))); },
      py::arg("data"));

  m.def(
      "sample_indices",
      [](std::size_t total, std::size_t n, const std::string& mode, std::uint64_t seed) {
        if (mode == "equidistant") return sample_indices(total, n, SamplingMode::Equidistant);
        if (mode != "random") throw ParameterError("mode must be 'equidistant' or 'random', got '" + mode + "'");
        Rng rng(seed);
        return sample_indices(total, n, SamplingMode::Random, &rng);
      },
      py::arg("total"), py::arg("n"), py::arg("mode") = "equidistant", py::arg("seed") = 0);

  m.def(
      "compute_stats",
      [](const fs::path& manifest, const std::string& split) {
        return stats_to_dict(compute_stats(read_manifest(manifest), parse_split(split)));
      },
      py::arg("manifest"), py::arg("split") = "train", "Per-channel (min, max) arrays keyed by modality.");
  m.def(
      "read_stats", [](const fs::path& path) { return stats_to_dict(read_stats(path)); }, py::arg("path"));

  m.def(
      "synth",
      [](const fs::path& out, std::uint64_t seed, std::size_t videos_per_class, std::size_t test_per_class,
         std::size_t frames, std::vector<std::size_t> dims, double margin) {
        if (dims.size() != 4) throw ParameterError("dims needs four widths: clip, beats, expression, sentiment");
        SynthConfig c;
        c.seed = seed;
        c.videos_per_class = videos_per_class;
        c.test_per_class = test_per_class;
        c.frames = frames;
        c.dims = InputDims{dims[0], dims[1], dims[2], dims[3]};
        c.margin = margin;
        const auto data = synth_dataset(c);
        write_synth_dataset(data, out);
        return data.oracle_accuracy;
      },
      py::arg("out"), py::arg("seed") = 0, py::arg("videos_per_class") = 10, py::arg("test_per_class") = 0,
      py::arg("frames") = 4, py::arg("dims") = std::vector<std::size_t>{8, 8, 8, 8}, py::arg("margin") = 10.0,
      "Writes a synthetic dataset and returns the nearest-mean oracle accuracy.");

  m.def(
      "param_count",
      [](std::size_t d, std::size_t heads, std::vector<std::size_t> dims, const std::string& pairing) {
        if (dims.size() != 4) throw ParameterError("dims needs four widths: clip, beats, expression, sentiment");
        ModelConfig c;
        c.d = d;
        c.heads = heads;
        c.dims = InputDims{dims[0], dims[1], dims[2], dims[3]};
        if (!pairing.empty()) c.pairings = parse_pairings(pairing);
        c.validate();
        return param_count(c);
      },
      py::arg("d") = 512, py::arg("heads") = 4, py::arg("dims") = std::vector<std::size_t>{512, 768, 768, 768},
      py::arg("pairing") = "");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, double eps, double tol) {
        GradCheckSuiteConfig c;
        c.seed = seed;
        c.eps = eps;
        c.tol = tol;
        GradCheckSuiteResult r;
        {
          py::gil_scoped_release release;
          r = run_gradcheck_suite(c);
        }
        std::vector<py::tuple> rows;
        for (const auto& e : r.entries) rows.push_back(py::make_tuple(e.name, e.elements, e.max_rel_error, e.passed));
        return py::make_tuple(r.passed, rows);
      },
      py::arg("seed") = 7, py::arg("eps") = 1e-3, py::arg("tol") = 1e-4,
      "Returns (passed, [(tensor, elements, max_rel_error, passed), ...]).");

  py::class_<Classifier>(m, "Classifier")
      .def(py::init<const fs::path&, std::optional<fs::path>>(), py::arg("checkpoint"), py::arg("stats") = py::none())
      .def("predict", &Classifier::predict, py::arg("features"), py::arg("video_id") = "",
           "Classifies a container path or a features dict.")
      .def("evaluate", &Classifier::evaluate, py::arg("manifest"), py::arg("split") = "test", py::arg("threads") = 1,
           py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("parameters", &Classifier::parameters)
      .def_property_readonly("config_json", &Classifier::config_json)
      .def_property_readonly("best_epoch", &Classifier::best_epoch);
}

// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/checkpoint.hpp"

#include <map>

#include "emofuse/container.hpp"
#include "emofuse/error.hpp"
#include "emofuse/io.hpp"

namespace emofuse {

nlohmann::json config_to_json(const ModelConfig& c) {
  return {
      {"d", c.d},
      {"heads", c.heads},
      {"dropout_p", c.dropout_p},
      {"frames", c.frames},
      {"class_count", c.class_count},
      {"pairings", format_pairings(c.pairings)},
      {"dims", {{"clip", c.dims.clip}, {"beats", c.dims.beats}, {"expression", c.dims.expression},
                {"sentiment", c.dims.sentiment}}},
  };
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.d = j.at("d").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.dropout_p = j.at("dropout_p").get<double>();
    c.frames = j.at("frames").get<std::size_t>();
    c.class_count = j.at("class_count").get<std::size_t>();
    c.pairings = parse_pairings(j.at("pairings").get<std::string>());
    const auto& dims = j.at("dims");
    c.dims.clip = dims.at("clip").get<std::size_t>();
    c.dims.beats = dims.at("beats").get<std::size_t>();
    c.dims.expression = dims.at("expression").get<std::size_t>();
    c.dims.sentiment = dims.at("sentiment").get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& err) {
    throw ConfigError(std::string("model config: ") + err.what());
  }
}

std::string encode_checkpoint(const Checkpoint& ck) {
  ck.config.validate();
  nlohmann::json header = {
      {"format", "emofuse-checkpoint"},
      {"model", config_to_json(ck.config)},
      {"seed", ck.seed},
      {"stats_digest", ck.stats_digest},
      {"param_count", param_count(ck.params)},
      {"best_epoch", ck.best_epoch},
      {"best_val_accuracy", ck.best_val_accuracy},
  };
  std::vector<Entry> entries;
  Entry json_entry;
  json_entry.name = std::string(kJsonEntryName);
  json_entry.bytes = header.dump();
  json_entry.dims = {static_cast<std::uint32_t>(json_entry.bytes.size())};
  entries.push_back(std::move(json_entry));
  for (const auto& [name, t] : ck.params.named()) {
    Entry e;
    e.name = name;
    for (auto extent : t.shape()) e.dims.push_back(static_cast<std::uint32_t>(extent));
    e.values.assign(t.data().begin(), t.data().end());
    entries.push_back(std::move(e));
  }
  return encode_entries(entries);
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  const auto entries = decode_entries(bytes);
  if (entries.empty() || entries.front().name != kJsonEntryName) {
    throw DecodeError(DecodeErrorKind::InvariantViolation, "checkpoint must start with a config.json entry");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(entries.front().bytes);
  } catch (const nlohmann::json::exception& err) {
    throw DecodeError(DecodeErrorKind::InvariantViolation, std::string("checkpoint header: ") + err.what());
  }
  Checkpoint ck;
  ck.config = config_from_json(header.at("model"));
  ck.seed = header.value("seed", std::uint64_t{0});
  ck.stats_digest = header.value("stats_digest", std::string{});
  ck.best_epoch = header.value("best_epoch", std::size_t{0});
  ck.best_val_accuracy = header.value("best_val_accuracy", 0.0);

  std::map<std::string, const Entry*> by_name;
  for (std::size_t i = 1; i < entries.size(); ++i) by_name[entries[i].name] = &entries[i];
  ck.params = init_params<float>(ck.config, 0);
  const auto named = ck.params.named();
  if (named.size() != by_name.size()) {
    throw DecodeError(DecodeErrorKind::InvariantViolation,
                      "checkpoint holds " + std::to_string(by_name.size()) + " tensors, config implies " +
                          std::to_string(named.size()));
  }
  for (auto [name, tensor] : named) {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DecodeError(DecodeErrorKind::InvariantViolation, "missing tensor '" + name + "'");
    const Entry& e = *it->second;
    ag::Shape shape(e.dims.begin(), e.dims.end());
    if (shape != tensor.shape()) {
      throw DimensionError("tensor '" + name + "' has shape " + ag::shape_str(shape) + ", config implies " +
                           ag::shape_str(tensor.shape()));
    }
    ag::check_finite<float>(e.values, name.c_str());
    std::copy(e.values.begin(), e.values.end(), tensor.mutable_data().begin());
  }
  return ck;
}

void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(checkpoint));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(resolve_input_path(path)));
}

}  // namespace emofuse

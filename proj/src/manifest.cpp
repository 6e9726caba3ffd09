// Copyright 2026 The emofuse Authors.
// SPDX-License-Identifier: Apache-2.0

#include "emofuse/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "emofuse/container.hpp"
#include "emofuse/error.hpp"
#include "emofuse/io.hpp"
#include "emofuse/rng.hpp"

namespace fs = std::filesystem;

namespace emofuse {
namespace {

constexpr std::string_view kHeader = "video_id,label,split,path";

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// RFC 4180 fields: double quotes delimit fields containing commas or quotes.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParameterError("manifest line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Validation: return "validation";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "test") return Split::Test;
  if (name == "validation") return Split::Validation;
  throw ParameterError("unknown split '" + std::string(name) + "'");
}

std::size_t DatasetManifest::count(Split split) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [split](const ManifestRow& r) { return r.split == split; }));
}

std::vector<ManifestRow> DatasetManifest::rows_in(Split split) const {
  std::vector<ManifestRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out),
               [split](const ManifestRow& r) { return r.split == split; });
  return out;
}

fs::path DatasetManifest::resolve(const ManifestRow& row) const {
  const fs::path p(row.path);
  if (p.is_absolute()) return p;
  const fs::path local = base_dir / p;
  if (fs::exists(local)) return local;
  const auto fallback = resolve_input_path(p);
  return fs::exists(fallback) ? fallback : local;
}

DatasetManifest parse_manifest(std::string_view text, fs::path base_dir) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const auto lines = lines_of(text);
  if (lines.empty() || trim(lines[0]) != kHeader) {
    throw ParameterError("manifest header must be '" + std::string(kHeader) + "'");
  }
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto fields = split_csv_line(lines[i], i + 1);
    if (fields.size() != 4) {
      throw ParameterError("manifest line " + std::to_string(i + 1) + ": expected 4 fields, got " +
                           std::to_string(fields.size()));
    }
    ManifestRow row;
    row.video_id = std::string(trim(fields[0]));
    if (row.video_id.empty()) throw ParameterError("manifest line " + std::to_string(i + 1) + ": empty video_id");
    row.label = parse_label(trim(fields[1]));
    row.split = parse_split(trim(fields[2]));
    row.path = std::string(trim(fields[3]));
    if (!seen.insert(row.video_id).second) {
      throw ParameterError("manifest: duplicate video_id '" + row.video_id + "'");
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

DatasetManifest read_manifest(const fs::path& path) {
  const auto resolved = resolve_input_path(path);
  return parse_manifest(read_file(resolved), resolved.parent_path());
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out(kHeader);
  out.push_back('\n');
  for (const auto& r : manifest.rows) {
    out += csv_field(r.video_id) + ',' + std::string(label_name(r.label)) + ',' + std::string(split_name(r.split)) +
           ',' + csv_field(r.path) + '\n';
  }
  return out;
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  DatasetManifest out = manifest;
  const fs::path target_dir = path.parent_path();
  const auto canon = [](const fs::path& p) { return fs::weakly_canonical(p.empty() ? fs::path(".") : p); };
  const fs::path from = canon(manifest.base_dir);
  const fs::path to = canon(target_dir);
  if (from != to) {
    for (auto& r : out.rows) {
      const fs::path p(r.path);
      if (p.is_absolute() || r.path.empty()) continue;
      r.path = (from / p).lexically_normal().lexically_relative(to).generic_string();
    }
  }
  out.base_dir = target_dir;
  write_file_atomic(path, format_manifest(out));
}

VideoFeatures load_row(const DatasetManifest& manifest, const ManifestRow& row) {
  VideoFeatures vf;
  vf.video_id = row.video_id;
  vf.label = row.label;
  vf.features = read_container(manifest.resolve(row));
  return vf;
}

std::vector<VideoFeatures> load_split(const DatasetManifest& manifest, Split split) {
  std::vector<VideoFeatures> out;
  for (const auto& row : manifest.rows) {
    if (row.split == split) out.push_back(load_row(manifest, row));
  }
  if (!out.empty()) {
    const auto dims = dims_of(out.front().features);
    for (const auto& vf : out) {
      if (dims_of(vf.features) != dims) {
        throw DimensionError("video '" + vf.video_id + "' has channel dims different from '" +
                             out.front().video_id + "'");
      }
    }
  }
  return out;
}

std::set<std::string> parse_blacklist(std::string_view text) {
  std::set<std::string> ids;
  for (auto line : lines_of(text)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    ids.emplace(line);
  }
  return ids;
}

std::set<std::string> read_blacklist(const fs::path& path) { return parse_blacklist(read_file(resolve_input_path(path))); }

CleanResult apply_blacklist(const DatasetManifest& manifest, const std::set<std::string>& blacklist) {
  std::set<std::string> keys;
  std::map<std::string, std::string> key_to_entry;
  for (const auto& entry : blacklist) {
    keys.insert(entry);
    key_to_entry.emplace(entry, entry);
    const auto stem = fs::path(entry).stem().string();
    if (!stem.empty() && stem != entry) {
      keys.insert(stem);
      key_to_entry.emplace(stem, entry);
    }
  }
  CleanResult result;
  result.manifest.base_dir = manifest.base_dir;
  std::set<std::string> matched;
  for (const auto& row : manifest.rows) {
    if (keys.contains(row.video_id)) {
      matched.insert(key_to_entry.at(row.video_id));
      switch (row.split) {
        case Split::Train: ++result.removed_train; break;
        case Split::Test: ++result.removed_test; break;
        case Split::Validation: ++result.removed_validation; break;
      }
      continue;
    }
    result.manifest.rows.push_back(row);
  }
  for (const auto& entry : blacklist) {
    if (!matched.contains(entry)) result.warnings.push_back("blacklist id '" + entry + "' not in manifest");
  }
  return result;
}

SplitResult build_app_split(const DatasetManifest& manifest) {
  SplitResult result;
  result.manifest.base_dir = manifest.base_dir;
  std::array<std::vector<const ManifestRow*>, kEmotionCount> by_class;
  for (const auto& row : manifest.rows) by_class[label_index(row.label)].push_back(&row);
  for (std::size_t c = 0; c < kEmotionCount; ++c) {
    auto& rows = by_class[c];
    std::sort(rows.begin(), rows.end(),
              [](const ManifestRow* a, const ManifestRow* b) { return a->video_id < b->video_id; });
    const std::size_t m = rows.size();
    if (m == 0) continue;
    const std::size_t train_count = (95 * m + 99) / 100;  // ceil(0.95 m) in integers
    if (m < 2) {
      result.warnings.push_back("class '" + std::string(label_name(static_cast<EmotionLabel>(c))) + "' has " +
                                std::to_string(m) + " video(s); its validation share is empty");
    }
    for (std::size_t i = 0; i < m; ++i) {
      ManifestRow row = *rows[i];
      row.split = i < train_count ? Split::Train : Split::Validation;
      result.manifest.rows.push_back(std::move(row));
    }
  }
  return result;
}

DatasetManifest carve_validation(const DatasetManifest& manifest, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ParameterError("validation fraction must lie in (0, 1), got " + std::to_string(fraction));
  }
  DatasetManifest out = manifest;
  Rng rng(seed);
  std::array<std::vector<std::size_t>, kEmotionCount> train_rows;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    if (out.rows[i].split == Split::Train) train_rows[label_index(out.rows[i].label)].push_back(i);
  }
  for (auto& rows : train_rows) {
    rng.shuffle(rows.begin(), rows.end());
    const auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(rows.size())));
    for (std::size_t j = 0; j < take && j < rows.size(); ++j) out.rows[rows[j]].split = Split::Validation;
  }
  return out;
}

}  // namespace emofuse

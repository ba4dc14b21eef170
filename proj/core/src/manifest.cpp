// SPDX-License-Identifier: Apache-2.0

#include "colorguard/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "colorguard/error.hpp"
#include "colorguard/image_io.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Label label) {
  return label == Label::kNatural ? "natural" : "colorized";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Label parse_label(std::string_view text) {
  if (text == "natural") return Label::kNatural;
  if (text == "colorized") return Label::kColorized;
  throw Error(ErrorCode::kInvalidArgument, "unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + std::string(text) + "'");
}

std::size_t DatasetManifest::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [label](const SampleRecord& r) { return r.label == label; }));
}

std::size_t DatasetManifest::group_count() const {
  std::unordered_set<std::string> groups;
  for (const auto& r : records) groups.insert(r.group_id);
  return groups.size();
}

std::optional<double> DatasetManifest::ratio() const {
  return natural_to_colorized_ratio(count(Label::kNatural), count(Label::kColorized));
}

std::optional<double> natural_to_colorized_ratio(std::size_t natural, std::size_t colorized) {
  if (colorized == 0) return std::nullopt;
  return static_cast<double>(natural) / static_cast<double>(colorized);
}

namespace {

struct GroupSummary {
  std::size_t natural = 0;
  std::set<std::string> colorizers;
  std::size_t colorized = 0;
  Split split = Split::kTrain;
};

// Group ids in order of first appearance.
std::vector<std::string> group_order(const DatasetManifest& m) {
  std::vector<std::string> order;
  std::unordered_set<std::string> seen;
  for (const auto& r : m.records) {
    if (seen.insert(r.group_id).second) order.push_back(r.group_id);
  }
  return order;
}

}  // namespace

void validate(const DatasetManifest& manifest) {
  std::unordered_map<std::string, GroupSummary> groups;
  for (const auto& r : manifest.records) {
    const bool none = r.colorizer_id == kNoColorizer;
    if ((r.label == Label::kNatural) != none) {
      throw Error(ErrorCode::kProtocolViolation,
                  "record " + r.image_path.string() + ": label " + std::string(to_string(r.label)) +
                      " with colorizer_id '" + r.colorizer_id + "'");
    }
    if (r.group_id.empty()) {
      throw Error(ErrorCode::kProtocolViolation, "record " + r.image_path.string() + " has no group_id");
    }
    auto [it, inserted] = groups.try_emplace(r.group_id);
    GroupSummary& g = it->second;
    if (inserted) {
      g.split = r.split;
    } else if (g.split != r.split) {
      throw Error(ErrorCode::kProtocolViolation, "group " + r.group_id + " spans several splits");
    }
    if (r.label == Label::kNatural) {
      ++g.natural;
    } else {
      ++g.colorized;
      g.colorizers.insert(r.colorizer_id);
    }
  }
  if (manifest.ratio_free) return;
  for (const auto& [id, g] : groups) {
    if (g.natural != 1 || g.colorized != kColorizedPerNatural ||
        g.colorizers.size() != static_cast<std::size_t>(kColorizedPerNatural)) {
      throw Error(ErrorCode::kProtocolViolation,
                  "group " + id + " has " + std::to_string(g.natural) + " natural and " +
                      std::to_string(g.colorized) + " colorized records (" +
                      std::to_string(g.colorizers.size()) + " distinct colorizers); expected 1 and 3");
    }
  }
}

namespace {

// stem -> file, sorted by stem. Two files sharing a stem are ambiguous.
std::map<std::string, fs::path> index_by_stem(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::kIoFailure, "not a directory: " + dir.string());
  }
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const std::string stem = entry.path().stem().string();
    auto [it, inserted] = out.emplace(stem, entry.path());
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateStem,
                  "stem '" + stem + "' matches both " + it->second.string() + " and " +
                      entry.path().string());
    }
  }
  return out;
}

}  // namespace

DatasetManifest build_manifest(const fs::path& natural_dir,
                               const std::map<std::string, fs::path>& colorized_dirs,
                               const std::string& name, std::uint64_t seed,
                               const BuildOptions& options) {
  if (!options.ratio_free && colorized_dirs.size() != static_cast<std::size_t>(kColorizedPerNatural)) {
    throw Error(ErrorCode::kProtocolViolation,
                "the 1:3 protocol needs exactly 3 colorizer directories, got " +
                    std::to_string(colorized_dirs.size()) + " (use ratio_free for external sets)");
  }
  for (const auto& [id, dir] : colorized_dirs) {
    if (id.empty() || id == kNoColorizer) {
      throw Error(ErrorCode::kInvalidArgument, "invalid colorizer id '" + id + "'");
    }
  }

  const auto naturals = index_by_stem(natural_dir);
  std::map<std::string, std::map<std::string, fs::path>> derivatives;
  for (const auto& [id, dir] : colorized_dirs) derivatives.emplace(id, index_by_stem(dir));

  DatasetManifest m;
  m.name = name;
  m.seed = seed;
  m.ratio_free = options.ratio_free;
  for (const auto& [stem, path] : naturals) {
    m.records.push_back({fs::absolute(path).lexically_normal(), Label::kNatural,
                         std::string(kNoColorizer), stem, options.split});
    for (const auto& [id, files] : derivatives) {
      auto it = files.find(stem);
      if (it == files.end()) {
        if (options.ratio_free) continue;
        throw Error(ErrorCode::kMissingDerivative,
                    "natural image " + path.string() + " has no derivative in colorizer '" + id +
                        "' (" + colorized_dirs.at(id).string() + ")");
      }
      m.records.push_back({fs::absolute(it->second).lexically_normal(), Label::kColorized, id, stem,
                           options.split});
    }
  }
  validate(m);
  return m;
}

std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double train_fraction,
                                                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train_fraction must lie in (0, 1)");
  }
  validate(manifest);
  std::vector<std::string> groups = group_order(manifest);
  Rng rng(mix_seed(seed, 0x5b1));
  rng.shuffle(std::span<std::string>(groups));

  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(groups.size())));
  if (n_train == 0 || n_train == groups.size()) {
    throw Error(ErrorCode::kDegenerateSplit,
                "fraction " + std::to_string(train_fraction) + " of " + std::to_string(groups.size()) +
                    " groups leaves one side empty");
  }
  const std::unordered_set<std::string> train_groups(groups.begin(), groups.begin() + n_train);

  DatasetManifest train{manifest.name + ".train", seed, manifest.ratio_free, {}};
  DatasetManifest val{manifest.name + ".val", seed, manifest.ratio_free, {}};
  for (const auto& r : manifest.records) {
    SampleRecord copy = r;
    if (train_groups.contains(r.group_id)) {
      copy.split = Split::kTrain;
      train.records.push_back(std::move(copy));
    } else {
      copy.split = Split::kVal;
      val.records.push_back(std::move(copy));
    }
  }
  return {std::move(train), std::move(val)};
}

DatasetManifest select_colorizers(const DatasetManifest& manifest,
                                  const std::vector<std::string>& keep, const std::string& name) {
  DatasetManifest out{name, manifest.seed, true, {}};
  for (const auto& r : manifest.records) {
    if (r.label == Label::kNatural ||
        std::find(keep.begin(), keep.end(), r.colorizer_id) != keep.end()) {
      out.records.push_back(r);
    }
  }
  return out;
}

DatasetManifest with_split(DatasetManifest manifest, Split split) {
  for (auto& r : manifest.records) r.split = split;
  return manifest;
}

namespace {

fs::path to_stored_path(const fs::path& p, const fs::path& base_dir) {
  if (base_dir.empty() || !p.is_absolute()) return p;
  const fs::path rel = p.lexically_normal().lexically_relative(base_dir.lexically_normal());
  if (rel.empty() || *rel.begin() == "..") return p;
  return rel;
}

}  // namespace

void write_manifest(std::ostream& out, const DatasetManifest& manifest, const fs::path& base_dir) {
  ordered_json header;
  header["manifest_name"] = manifest.name;
  header["seed"] = manifest.seed;
  header["ratio_free"] = manifest.ratio_free;
  out << header.dump() << '\n';
  for (const auto& r : manifest.records) {
    ordered_json line;
    line["image_path"] = to_stored_path(r.image_path, base_dir).generic_string();
    line["label"] = to_string(r.label);
    line["colorizer_id"] = r.colorizer_id;
    line["group_id"] = r.group_id;
    line["split"] = to_string(r.split);
    out << line.dump() << '\n';
  }
}

DatasetManifest read_manifest(std::istream& in, const fs::path& base_dir) {
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kIoFailure,
                  "manifest line " + std::to_string(line_no) + " is not JSON: " + e.what());
    }
    try {
      if (!have_header) {
        m.name = j.at("manifest_name").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.ratio_free = j.value("ratio_free", false);
        have_header = true;
        continue;
      }
      SampleRecord r;
      fs::path p = fs::path(j.at("image_path").get<std::string>());
      if (p.is_relative() && !base_dir.empty()) p = (base_dir / p).lexically_normal();
      r.image_path = p;
      r.label = parse_label(j.at("label").get<std::string>());
      r.colorizer_id = j.at("colorizer_id").get<std::string>();
      r.group_id = j.at("group_id").get<std::string>();
      r.split = parse_split(j.at("split").get<std::string>());
      m.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIoFailure,
                  "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::kIoFailure, "manifest has no header line");
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  const fs::path abs = fs::absolute(path);
  std::error_code ec;
  if (abs.has_parent_path()) fs::create_directories(abs.parent_path(), ec);
  std::ofstream out(abs, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write manifest " + path.string());
  write_manifest(out, manifest, abs.parent_path());
  if (!out) throw Error(ErrorCode::kIoFailure, "short write on " + path.string());
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open manifest " + path.string());
  return read_manifest(in, fs::absolute(path).parent_path());
}

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#include "colorguard/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "colorguard/error.hpp"
#include "colorguard/hash.hpp"

namespace colorguard {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'C', 'G', 'W', 'B'};
constexpr std::uint32_t kBlobVersion = 1;

// Raw little-endian layout:
//   magic "CGWB", u32 version, u32 count, then per parameter
//   u32 name_len, name bytes, u32 rank, i32 dims[rank], u64 n, f32 values[n]
template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

std::string encode(const std::vector<const Parameter*>& params) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kBlobVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->shape.size()));
    for (int d : p->shape) put<std::int32_t>(out, d);
    put<std::uint64_t>(out, p->value.size());
    out.append(reinterpret_cast<const char*>(p->value.data()), p->value.size() * sizeof(float));
  }
  return out;
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > data.size()) throw Error(ErrorCode::kCorruptCheckpoint, "truncated weights blob");
    T v;
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    if (pos + n > data.size()) throw Error(ErrorCode::kCorruptCheckpoint, "truncated weights blob");
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

std::map<std::string, Parameter> decode(const std::string& blob) {
  Reader r{blob};
  if (r.bytes(4) != std::string(kMagic, 4)) throw Error(ErrorCode::kCorruptCheckpoint, "bad weights magic");
  if (r.get<std::uint32_t>() != kBlobVersion) {
    throw Error(ErrorCode::kSchemaVersionMismatch, "unsupported weights blob version");
  }
  const auto count = r.get<std::uint32_t>();
  std::map<std::string, Parameter> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    Parameter p;
    p.name = r.bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) p.shape.push_back(r.get<std::int32_t>());
    const auto n = r.get<std::uint64_t>();
    const std::string raw = r.bytes(n * sizeof(float));
    p.value.resize(n);
    std::memcpy(p.value.data(), raw.data(), raw.size());
    out.emplace(p.name, std::move(p));
  }
  return out;
}

// Branch parameters are stored with a "frozen." / "trainable." prefix.
std::vector<std::pair<std::string, const Parameter*>> named_parameters(const EnsembleModel& model) {
  std::vector<std::pair<std::string, const Parameter*>> out;
  for (const Parameter* p : model.parameters(ParamGroup::kFrozen)) out.emplace_back("frozen." + p->name, p);
  for (const Parameter* p : model.parameters(ParamGroup::kTrainable)) out.emplace_back("trainable." + p->name, p);
  for (const Parameter* p : model.parameters(ParamGroup::kHead)) out.emplace_back(p->name, p);
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "short write on " + path.string());
}

nlohmann::json external_weights(const Backbone& b) {
  if (b.weights_path().empty()) return nullptr;
  return {{"file", b.weights_path().filename().string()}, {"sha256", b.fingerprint()}};
}

}  // namespace

void save_checkpoint(const EnsembleModel& model, const std::vector<TrainRecord>& records,
                     const TrainConfig& train_cfg, const PreprocessConfig& preprocess,
                     const CheckpointInfo& info, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<const Parameter*> ordered;
  std::vector<Parameter> renamed;
  const auto named = named_parameters(model);
  renamed.reserve(named.size());
  for (const auto& [name, p] : named) {
    renamed.push_back(Parameter{name, p->shape, p->value, p->trainable});
  }
  for (const auto& p : renamed) ordered.push_back(&p);
  const std::string blob = encode(ordered);
  write_file(dir / kWeightsFile, blob);

  nlohmann::json meta;
  meta["schema_version"] = kCheckpointSchemaVersion;
  meta["model_id"] = info.model_id;
  meta["training_manifest"] = info.training_manifest;
  meta["spec"] = model.spec();
  meta["feature_dims"] = {{"frozen", model.feature_dims().frozen}, {"trainable", model.feature_dims().trainable}};
  meta["concat_order"] = {"frozen", "trainable"};
  meta["label_encoding"] = {{"natural", 0}, {"colorized", 1}};
  meta["head_activation"] = "softmax";
  meta["preprocess"] = preprocess;
  meta["train"] = train_cfg;
  meta["seeds"] = {{"run", info.run_seed},
                   {"init", model.spec().init_seed},
                   {"shuffle", preprocess.shuffle_seed},
                   {"train", train_cfg.seed}};
  meta["trainable_branch_finetuned"] = model.trainable_branch_finetuned();
  meta["frozen_checksum"] = model.group_checksum(ParamGroup::kFrozen);
  meta["external_weights"] = {{"frozen", external_weights(model.frozen_branch())},
                              {"trainable", external_weights(model.trainable_branch())}};
  meta["records"] = records;
  meta["weights_file"] = kWeightsFile;
  meta["weights_sha256"] = sha256_hex(blob);
  write_file(dir / kMetadataFile, meta.dump(2) + "\n");
}

LoadedCheckpoint load_checkpoint(const fs::path& dir, const BackboneLoadOptions& options) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::kIoFailure, "no checkpoint directory at " + dir.string());
  const std::string meta_text = read_file(dir / kMetadataFile);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("metadata.json is not JSON: ") + e.what());
  }
  if (!meta.is_object() || !meta.contains("schema_version") || !meta["schema_version"].is_number_integer()) {
    throw Error(ErrorCode::kCorruptCheckpoint, "metadata.json lacks schema_version");
  }
  if (meta["schema_version"].get<int>() != kCheckpointSchemaVersion) {
    throw Error(ErrorCode::kSchemaVersionMismatch,
                "checkpoint schema " + meta["schema_version"].dump() + ", supported " +
                    std::to_string(kCheckpointSchemaVersion));
  }

  try {
    const std::string blob = read_file(dir / meta.at("weights_file").get<std::string>());
    if (sha256_hex(blob) != meta.at("weights_sha256").get<std::string>()) {
      throw Error(ErrorCode::kCorruptCheckpoint, "weights hash does not match metadata");
    }
    if (meta.at("concat_order") != nlohmann::json({"frozen", "trainable"})) {
      throw Error(ErrorCode::kCorruptCheckpoint, "unsupported concat_order " + meta.at("concat_order").dump());
    }

    const EnsembleSpec spec = meta.at("spec").get<EnsembleSpec>();
    EnsembleModel model = build_ensemble(spec, options);
    const auto& dims = meta.at("feature_dims");
    if (dims.at("frozen").get<std::size_t>() != model.feature_dims().frozen ||
        dims.at("trainable").get<std::size_t>() != model.feature_dims().trainable) {
      throw Error(ErrorCode::kCorruptCheckpoint, "feature_dims disagree with the rebuilt model");
    }
    for (const char* branch : {"frozen", "trainable"}) {
      const auto& ext = meta.at("external_weights").at(branch);
      if (ext.is_null()) continue;
      const Backbone& b = std::string(branch) == "frozen" ? model.frozen_branch() : model.trainable_branch();
      if (b.fingerprint() != ext.at("sha256").get<std::string>()) {
        throw Error(ErrorCode::kCorruptCheckpoint,
                    std::string(branch) + " backbone weights differ from the ones used for training");
      }
    }

    auto stored = decode(blob);
    auto assign = [&](const std::string& name, Parameter* p) {
      auto it = stored.find(name);
      if (it == stored.end()) throw Error(ErrorCode::kCorruptCheckpoint, "missing parameter " + name);
      if (it->second.value.size() != p->value.size() || it->second.shape != p->shape) {
        throw Error(ErrorCode::kCorruptCheckpoint, "shape mismatch for parameter " + name);
      }
      p->value = std::move(it->second.value);
      stored.erase(it);
    };
    for (Parameter* p : model.parameters(ParamGroup::kFrozen)) assign("frozen." + p->name, p);
    for (Parameter* p : model.parameters(ParamGroup::kTrainable)) assign("trainable." + p->name, p);
    for (Parameter* p : model.parameters(ParamGroup::kHead)) assign(p->name, p);
    if (!stored.empty()) {
      throw Error(ErrorCode::kCorruptCheckpoint, "unexpected parameter " + stored.begin()->first);
    }
    if (model.group_checksum(ParamGroup::kFrozen) != meta.at("frozen_checksum").get<std::string>()) {
      throw Error(ErrorCode::kCorruptCheckpoint, "frozen branch checksum mismatch");
    }

    CheckpointInfo info{meta.value("model_id", std::string{}), meta.value("training_manifest", std::string{}),
                        meta.at("seeds").value("run", std::uint64_t{0})};
    PreprocessConfig pre = meta.at("preprocess").get<PreprocessConfig>();
    TrainConfig tc = meta.at("train").get<TrainConfig>();
    return LoadedCheckpoint{std::move(model), std::move(meta), pre, tc, std::move(info)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptCheckpoint, std::string("malformed metadata: ") + e.what());
  }
}

}  // namespace colorguard

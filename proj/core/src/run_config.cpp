// SPDX-License-Identifier: Apache-2.0

#include "colorguard/run_config.hpp"

#include <fstream>
#include <set>

#include "colorguard/error.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

namespace fs = std::filesystem;

namespace {

void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorCode::kInvalidArgument, "unknown key '" + key + "' in " + where);
    }
  }
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal();
}

}  // namespace

void RunConfig::validate() const {
  preprocess.validate();
  model.validate();
  train.validate();
  if (train_manifest.empty()) throw Error(ErrorCode::kInvalidArgument, "train_manifest is required");
  if (output_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "output_dir is required");
  if (!val_manifest && !(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train_fraction must lie in (0, 1)");
  }
  if (model.input_shape[0] != preprocess.target_height || model.input_shape[1] != preprocess.target_width) {
    throw Error(ErrorCode::kInvalidArgument, "model input shape must match the preprocess target size");
  }
}

RunConfig parse_run_config(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidArgument, "run config must be a JSON object");
  reject_unknown_keys(doc,
                      {"schema", "seed", "model_id", "output_dir", "train_manifest", "val_manifest",
                       "train_fraction", "preprocess", "model", "train"},
                      "run config");
  const int schema = doc.value("schema", 0);
  if (schema != kRunConfigSchema) {
    throw Error(ErrorCode::kInvalidArgument,
                "run config schema must be " + std::to_string(kRunConfigSchema) + ", got " + std::to_string(schema));
  }
  try {
    RunConfig cfg;
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.model_id = doc.value("model_id", cfg.model_id);
    cfg.output_dir = resolve(doc.at("output_dir").get<std::string>(), base_dir);
    cfg.train_manifest = resolve(doc.at("train_manifest").get<std::string>(), base_dir);
    if (doc.contains("val_manifest") && !doc.at("val_manifest").is_null()) {
      cfg.val_manifest = resolve(doc.at("val_manifest").get<std::string>(), base_dir);
    }
    cfg.train_fraction = doc.value("train_fraction", cfg.train_fraction);

    const nlohmann::json pre = doc.value("preprocess", nlohmann::json::object());
    reject_unknown_keys(pre,
                        {"target_height", "target_width", "scale", "interpolation", "shuffle_seed",
                         "shuffle_buffer", "cache_enabled", "prefetch_depth", "decode_workers", "input_mean",
                         "input_std"},
                        "preprocess");
    cfg.preprocess = pre.get<PreprocessConfig>();
    if (!pre.contains("shuffle_seed")) cfg.preprocess.shuffle_seed = mix_seed(cfg.seed, 11);

    nlohmann::json model = doc.value("model", nlohmann::json::object());
    reject_unknown_keys(model, {"frozen_branch", "trainable_branch", "frozen_flatten", "init_seed", "head_units"},
                        "model");
    if (!model.contains("frozen_branch") || !model.contains("trainable_branch")) {
      throw Error(ErrorCode::kInvalidArgument, "model needs frozen_branch and trainable_branch");
    }
    if (!model.contains("init_seed")) model["init_seed"] = mix_seed(cfg.seed, 13);
    model["input_shape"] = {cfg.preprocess.target_height, cfg.preprocess.target_width, 3};
    cfg.model = model.get<EnsembleSpec>();

    const nlohmann::json train = doc.value("train", nlohmann::json::object());
    reject_unknown_keys(train,
                        {"epochs", "batch_size", "learning_rate", "optimizer", "loss", "class_weights", "seed",
                         "early_stop_patience", "momentum"},
                        "train");
    cfg.train = train.get<TrainConfig>();
    if (!train.contains("seed")) cfg.train.seed = mix_seed(cfg.seed, 17);

    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed run config: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "config " + path.string() + " is not JSON: " + e.what());
  }
  return parse_run_config(doc, fs::absolute(path).parent_path());
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["schema"] = kRunConfigSchema;
  j["seed"] = cfg.seed;
  j["model_id"] = cfg.model_id;
  j["output_dir"] = cfg.output_dir.string();
  j["train_manifest"] = cfg.train_manifest.string();
  j["val_manifest"] = cfg.val_manifest ? nlohmann::json(cfg.val_manifest->string()) : nlohmann::json(nullptr);
  j["train_fraction"] = cfg.train_fraction;
  j["preprocess"] = cfg.preprocess;
  nlohmann::json model = cfg.model;
  model.erase("input_shape");
  j["model"] = model;
  j["train"] = cfg.train;
  return j;
}

}  // namespace colorguard

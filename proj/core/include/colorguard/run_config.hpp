// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "colorguard/ensemble.hpp"
#include "colorguard/preprocess.hpp"
#include "colorguard/train.hpp"

namespace colorguard {

inline constexpr int kRunConfigSchema = 1;

// Everything one training run needs. Stored as a single JSON document:
//
//   {
//     "schema": 1,
//     "seed": 7,
//     "model_id": "model1",
//     "output_dir": "runs/model1",
//     "train_manifest": "data/manifest.jsonl",
//     "val_manifest": null,            // optional; else split by train_fraction
//     "train_fraction": 0.8,
//     "preprocess": { ... },           // PreprocessConfig
//     "model": { "frozen_branch": {"name": "VGG16"},
//                "trainable_branch": {"name": "MOBILENET_V2"},
//                "frozen_flatten": true },
//     "train": { ... }                 // TrainConfig
//   }
//
// Relative paths resolve against the config file's directory. Seeds not
// given explicitly (preprocess.shuffle_seed, model.init_seed, train.seed)
// are derived from the global seed.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string model_id = "ensemble";
  std::filesystem::path output_dir;
  std::filesystem::path train_manifest;
  std::optional<std::filesystem::path> val_manifest;
  double train_fraction = 0.8;
  PreprocessConfig preprocess;
  EnsembleSpec model;
  TrainConfig train;

  // Throws InvalidArgument on any broken nested invariant.
  void validate() const;
};

RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace colorguard

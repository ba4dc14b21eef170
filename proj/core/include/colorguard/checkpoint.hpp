// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "colorguard/ensemble.hpp"
#include "colorguard/preprocess.hpp"
#include "colorguard/train.hpp"

namespace colorguard {

inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr const char* kWeightsFile = "weights.bin";
inline constexpr const char* kMetadataFile = "metadata.json";

struct CheckpointInfo {
  std::string model_id;            // free-form, shown in reports
  std::string training_manifest;   // name of the manifest the model was trained on
  std::uint64_t run_seed = 0;
};

// Writes <dir>/weights.bin (every in-process parameter, frozen included) and
// <dir>/metadata.json. Throws IoFailure.
void save_checkpoint(const EnsembleModel& model, const std::vector<TrainRecord>& records,
                     const TrainConfig& train_cfg, const PreprocessConfig& preprocess,
                     const CheckpointInfo& info, const std::filesystem::path& dir);

struct LoadedCheckpoint {
  EnsembleModel model;
  nlohmann::json metadata;
  PreprocessConfig preprocess;
  TrainConfig train;
  CheckpointInfo info;
};

// IoFailure when the directory or files are missing, SchemaVersionMismatch
// for another schema version, CorruptCheckpoint when hashes, names or shapes
// disagree with the metadata.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir,
                                 const BackboneLoadOptions& options = {});

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "colorguard/ensemble.hpp"
#include "colorguard/optimizer.hpp"
#include "colorguard/pipeline.hpp"

namespace colorguard {

enum class LossKind { kSoftmaxCrossEntropy };

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-4;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
  // (natural, colorized) sample weights; off by default so training sees
  // the raw 1:3 distribution.
  std::optional<std::array<double, 2>> class_weights;
  // Selects the per-epoch batch order of the training stream.
  std::uint64_t seed = 0;
  std::optional<int> early_stop_patience;
  double momentum = 0.9;

  // Throws InvalidArgument. A learning rate of exactly 0 is accepted and
  // leaves every parameter untouched.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct TrainRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_time = 0.0;  // seconds
  std::size_t natural_seen = 0;
  std::size_t colorized_seen = 0;
  bool best = false;

  // Equality ignores wall_time.
  bool same_metrics(const TrainRecord& other) const;
};

void to_json(nlohmann::json& j, const TrainRecord& record);
void from_json(const nlohmann::json& j, TrainRecord& record);

struct TrainCallbacks {
  std::function<void(const Batch&)> on_batch;
  // Called after validation; model holds the current (not best) weights.
  std::function<void(const TrainRecord&, const EnsembleModel&)> on_epoch_end;
};

struct TrainResult {
  std::vector<TrainRecord> records;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
};

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Mean loss and accuracy over one pass of a pipeline. EmptyPipeline when it
// yields nothing.
LossAccuracy measure(EnsembleModel& model, const Pipeline& pipe, const LossOptions& options = {});

// Updates only the trainable branch and the head. On return the model holds
// the weights of the epoch with the best validation accuracy. Throws
// NanLoss (naming epoch and batch) or EmptyPipeline.
TrainResult train(EnsembleModel& model, const Pipeline& train_pipe, const Pipeline& val_pipe,
                  const TrainConfig& cfg, const TrainCallbacks& callbacks = {});

}  // namespace colorguard

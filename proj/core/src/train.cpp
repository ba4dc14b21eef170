// SPDX-License-Identifier: Apache-2.0

#include "colorguard/train.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "colorguard/error.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be a finite value >= 0");
  }
  if (class_weights && (!((*class_weights)[0] > 0.0) || !((*class_weights)[1] > 0.0))) {
    throw Error(ErrorCode::kInvalidArgument, "class_weights must be positive");
  }
  if (early_stop_patience && *early_stop_patience < 1) {
    throw Error(ErrorCode::kInvalidArgument, "early_stop_patience must be >= 1");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = nlohmann::json{{"epochs", cfg.epochs},
                     {"batch_size", cfg.batch_size},
                     {"learning_rate", cfg.learning_rate},
                     {"optimizer", to_string(cfg.optimizer)},
                     {"loss", "SOFTMAX_CROSS_ENTROPY"},
                     {"seed", cfg.seed},
                     {"momentum", cfg.momentum}};
  j["class_weights"] = cfg.class_weights ? nlohmann::json(*cfg.class_weights) : nlohmann::json(nullptr);
  j["early_stop_patience"] =
      cfg.early_stop_patience ? nlohmann::json(*cfg.early_stop_patience) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  TrainConfig d;
  cfg.epochs = j.value("epochs", d.epochs);
  cfg.batch_size = j.value("batch_size", d.batch_size);
  cfg.learning_rate = j.value("learning_rate", d.learning_rate);
  cfg.optimizer = parse_optimizer(j.value("optimizer", std::string(to_string(d.optimizer))));
  if (j.value("loss", std::string("SOFTMAX_CROSS_ENTROPY")) != "SOFTMAX_CROSS_ENTROPY") {
    throw Error(ErrorCode::kInvalidArgument, "only SOFTMAX_CROSS_ENTROPY loss is supported");
  }
  cfg.seed = j.value("seed", d.seed);
  cfg.momentum = j.value("momentum", d.momentum);
  cfg.class_weights.reset();
  if (j.contains("class_weights") && !j.at("class_weights").is_null()) {
    cfg.class_weights = j.at("class_weights").get<std::array<double, 2>>();
  }
  cfg.early_stop_patience.reset();
  if (j.contains("early_stop_patience") && !j.at("early_stop_patience").is_null()) {
    cfg.early_stop_patience = j.at("early_stop_patience").get<int>();
  }
}

bool TrainRecord::same_metrics(const TrainRecord& o) const {
  return epoch == o.epoch && train_loss == o.train_loss && train_accuracy == o.train_accuracy &&
         val_loss == o.val_loss && val_accuracy == o.val_accuracy && natural_seen == o.natural_seen &&
         colorized_seen == o.colorized_seen && best == o.best;
}

void to_json(nlohmann::json& j, const TrainRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"train_accuracy", r.train_accuracy},
                     {"val_loss", r.val_loss},
                     {"val_accuracy", r.val_accuracy},
                     {"wall_time", r.wall_time},
                     {"natural_seen", r.natural_seen},
                     {"colorized_seen", r.colorized_seen},
                     {"best", r.best}};
}

void from_json(const nlohmann::json& j, TrainRecord& r) {
  r.epoch = j.at("epoch").get<int>();
  r.train_loss = j.at("train_loss").get<double>();
  r.train_accuracy = j.at("train_accuracy").get<double>();
  r.val_loss = j.at("val_loss").get<double>();
  r.val_accuracy = j.at("val_accuracy").get<double>();
  r.wall_time = j.value("wall_time", 0.0);
  r.natural_seen = j.value("natural_seen", std::size_t{0});
  r.colorized_seen = j.value("colorized_seen", std::size_t{0});
  r.best = j.value("best", false);
}

LossAccuracy measure(EnsembleModel& model, const Pipeline& pipe, const LossOptions& options) {
  BatchStats stats;
  auto stream = pipe.epoch(0);
  while (auto batch = stream.next()) model.loss(*batch, options, nullptr, &stats);
  if (stats.count == 0) throw Error(ErrorCode::kEmptyPipeline, "pipeline '" + pipe.manifest().name + "' is empty");
  const auto n = static_cast<double>(stats.count);
  return {stats.loss_sum / n, static_cast<double>(stats.correct) / n, stats.count};
}

namespace {

std::vector<std::vector<float>> snapshot(const std::vector<Parameter*>& params) {
  std::vector<std::vector<float>> out;
  out.reserve(params.size());
  for (const Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<std::vector<float>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainResult train(EnsembleModel& model, const Pipeline& train_pipe, const Pipeline& val_pipe,
                  const TrainConfig& cfg, const TrainCallbacks& callbacks) {
  cfg.validate();
  if (train_pipe.record_count() == 0) {
    throw Error(ErrorCode::kEmptyPipeline, "training pipeline is empty");
  }
  if (val_pipe.record_count() == 0) {
    throw Error(ErrorCode::kEmptyPipeline, "validation pipeline is empty");
  }

  const LossOptions loss_options{cfg.class_weights};
  const std::vector<Parameter*> params = model.optimized_parameters();
  auto optimizer = make_optimizer({cfg.optimizer, cfg.learning_rate, cfg.momentum});

  TrainResult result;
  std::vector<std::vector<float>> best_values = snapshot(params);
  double best_acc = -1.0;
  int since_best = 0;
  std::vector<std::vector<float>> grads;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    TrainRecord rec;
    rec.epoch = epoch;
    BatchStats stats;

    const auto stream_epoch = static_cast<int>(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)) & 0x7fffffff);
    auto stream = train_pipe.epoch(stream_epoch);
    int batch_index = 0;
    while (auto batch = stream.next()) {
      if (callbacks.on_batch) callbacks.on_batch(*batch);
      for (int y : batch->labels) (y == 0 ? rec.natural_seen : rec.colorized_seen)++;
      const double loss = model.loss(*batch, loss_options, &grads, &stats);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kNanLoss, "non-finite loss " + std::to_string(loss) + " at epoch " +
                                             std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      }
      optimizer->step(params, grads);
      ++batch_index;
    }
    rec.train_loss = stats.loss_sum / static_cast<double>(stats.count);
    rec.train_accuracy = static_cast<double>(stats.correct) / static_cast<double>(stats.count);

    const LossAccuracy val = measure(model, val_pipe, loss_options);
    rec.val_loss = val.loss;
    rec.val_accuracy = val.accuracy;
    if (rec.val_accuracy > best_acc) {
      best_acc = rec.val_accuracy;
      best_values = snapshot(params);
      result.best_epoch = epoch;
      rec.best = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.records.push_back(rec);
    if (callbacks.on_epoch_end) callbacks.on_epoch_end(rec, model);

    if (cfg.early_stop_patience && since_best >= *cfg.early_stop_patience) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  restore(params, best_values);
  result.best_val_accuracy = best_acc;
  return result;
}

}  // namespace colorguard

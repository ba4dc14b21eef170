// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "colorguard/backbone.hpp"
#include "colorguard/classifier.hpp"
#include "colorguard/preprocess.hpp"

namespace colorguard {

struct EnsembleSpec {
  BackboneId frozen_branch{BackboneName::kTinyCnn, WeightsOrigin::kRandom};
  BackboneId trainable_branch{BackboneName::kTinyCnn2, WeightsOrigin::kRandom};
  std::array<int, 3> input_shape{224, 224, 3};  // height, width, channels
  int head_units = 2;
  // Flatten a spatial frozen output; vector outputs pass through unchanged.
  bool frozen_flatten = true;
  std::uint64_t init_seed = 0;

  // Throws InvalidArgument.
  void validate() const;
  bool operator==(const EnsembleSpec&) const = default;
};

void to_json(nlohmann::json& j, const EnsembleSpec& spec);
void from_json(const nlohmann::json& j, EnsembleSpec& spec);

enum class ParamGroup { kFrozen, kTrainable, kHead };

struct FeatureDims {
  std::size_t frozen = 0;
  std::size_t trainable = 0;
};

// The two level-0 outputs exactly as the head consumes them.
struct FeatureTap {
  std::size_t batch = 0;
  std::vector<float> frozen;     // [batch, d_frozen]
  std::vector<float> trainable;  // [batch, d_trainable]
};

struct LossOptions {
  // Per-class sample weights (natural, colorized); unit weights when empty.
  std::optional<std::array<double, 2>> class_weights;
};

struct BatchStats {
  double loss_sum = 0.0;  // weighted per-sample losses, summed
  std::size_t correct = 0;
  std::size_t count = 0;
};

// Two-branch stacked ensemble: a shared input feeds a frozen feature
// extractor and a trainable one, their outputs are concatenated (frozen
// first) and a dense 2-unit head produces logits.
class EnsembleModel final : public Classifier {
 public:
  EnsembleModel(EnsembleSpec spec, std::unique_ptr<Backbone> frozen, std::unique_ptr<Backbone> trainable);

  const EnsembleSpec& spec() const { return spec_; }
  FeatureDims feature_dims() const { return dims_; }
  std::size_t head_input_width() const { return dims_.frozen + dims_.trainable; }

  const Backbone& frozen_branch() const { return *frozen_; }
  const Backbone& trainable_branch() const { return *trainable_; }

  // False when the trainable branch runs on an inference-only backend and
  // only the head learns.
  bool trainable_branch_finetuned() const { return trainable_->supports_training(); }

  std::vector<Logits> logits(const Batch& batch) const override;
  FeatureTap feature_tap(const Batch& batch) const;
  // Concatenated head input, [batch, d_frozen + d_trainable].
  std::vector<float> head_input(const Batch& batch) const;
  // Head applied to precomputed concatenated features.
  std::vector<Logits> head_logits(const std::vector<float>& head_input, std::size_t batch) const;

  std::vector<Parameter*> parameters(ParamGroup group);
  std::vector<const Parameter*> parameters(ParamGroup group) const;
  // Parameters updated by training: trainable group then head group.
  std::vector<Parameter*> optimized_parameters();
  std::vector<const Parameter*> all_parameters() const;

  // SHA-256 over a group's weights (for external weights, their file hash).
  std::string group_checksum(ParamGroup group) const;

  // Mean softmax cross-entropy over the batch (with optional class weights,
  // divided by batch size). When grads is non-null it receives d(loss)/d(p)
  // for every optimized_parameters() entry, same order and sizes.
  double loss(const Batch& batch, const LossOptions& options,
              std::vector<std::vector<float>>* grads = nullptr, BatchStats* stats = nullptr);

 private:
  void check_batch(const Batch& batch) const;
  std::vector<float> frozen_features(const Batch& batch) const;

  EnsembleSpec spec_;
  std::unique_ptr<Backbone> frozen_;
  std::unique_ptr<Backbone> trainable_;
  FeatureDims dims_;
  Parameter head_weight_;  // [2, d_frozen + d_trainable]
  Parameter head_bias_;    // [2]
};

// Loads both backbones, checks they can be concatenated and initialises the
// head (Glorot-uniform from spec.init_seed). Frozen-branch parameters are
// marked non-trainable.
EnsembleModel build_ensemble(const EnsembleSpec& spec, const BackboneLoadOptions& options = {});

}  // namespace colorguard

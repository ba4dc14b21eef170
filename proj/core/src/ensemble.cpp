// SPDX-License-Identifier: Apache-2.0

#include "colorguard/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <nlohmann/json.hpp>

#include "colorguard/error.hpp"
#include "colorguard/hash.hpp"
#include "colorguard/rng.hpp"
#include "colorguard/tiny_cnn.hpp"

namespace colorguard {

std::array<double, 2> softmax(const Logits& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

int predict_class(const Logits& z) { return z[1] > z[0] ? 1 : 0; }

void EnsembleSpec::validate() const {
  if (head_units != 2) {
    throw Error(ErrorCode::kInvalidArgument, "head_units must be 2, got " + std::to_string(head_units));
  }
  if (frozen_branch == trainable_branch) {
    throw Error(ErrorCode::kInvalidArgument, "frozen and trainable branches must differ");
  }
  if (input_shape[0] <= 0 || input_shape[1] <= 0 || input_shape[2] != 3) {
    throw Error(ErrorCode::kInvalidArgument, "input_shape must be (height, width, 3)");
  }
  frozen_branch.validate();
  trainable_branch.validate();
}

void to_json(nlohmann::json& j, const EnsembleSpec& spec) {
  j = nlohmann::json{{"frozen_branch", spec.frozen_branch},
                     {"trainable_branch", spec.trainable_branch},
                     {"input_shape", spec.input_shape},
                     {"head_units", spec.head_units},
                     {"frozen_flatten", spec.frozen_flatten},
                     {"init_seed", spec.init_seed}};
}

void from_json(const nlohmann::json& j, EnsembleSpec& spec) {
  EnsembleSpec d;
  spec.frozen_branch = j.at("frozen_branch").get<BackboneId>();
  spec.trainable_branch = j.at("trainable_branch").get<BackboneId>();
  spec.input_shape = j.value("input_shape", d.input_shape);
  spec.head_units = j.value("head_units", d.head_units);
  spec.frozen_flatten = j.value("frozen_flatten", d.frozen_flatten);
  spec.init_seed = j.value("init_seed", d.init_seed);
}

EnsembleModel::EnsembleModel(EnsembleSpec spec, std::unique_ptr<Backbone> frozen,
                             std::unique_ptr<Backbone> trainable)
    : spec_(std::move(spec)), frozen_(std::move(frozen)), trainable_(std::move(trainable)) {
  spec_.validate();
  const FeatureShape fs = frozen_->output_shape();
  const FeatureShape ts = trainable_->output_shape();
  if (fs.spatial && !spec_.frozen_flatten) {
    throw Error(ErrorCode::kIncompatibleBranches,
                "frozen branch emits a spatial map; enable frozen_flatten to concatenate it");
  }
  if (ts.spatial) {
    throw Error(ErrorCode::kIncompatibleBranches,
                "trainable branch must emit a feature vector, got a spatial map");
  }
  dims_ = {fs.flat_size(), ts.flat_size()};
  for (Parameter* p : frozen_->parameters()) p->trainable = false;
  for (Parameter* p : trainable_->parameters()) p->trainable = true;

  const std::size_t width = head_input_width();
  head_weight_.name = "head.weight";
  head_weight_.shape = {spec_.head_units, static_cast<int>(width)};
  head_weight_.value.resize(static_cast<std::size_t>(spec_.head_units) * width);
  Rng rng(mix_seed(spec_.init_seed, 3));
  const double limit = std::sqrt(6.0 / static_cast<double>(width + spec_.head_units));
  for (auto& v : head_weight_.value) v = static_cast<float>(rng.uniform(-limit, limit));
  head_bias_.name = "head.bias";
  head_bias_.shape = {spec_.head_units};
  head_bias_.value.assign(static_cast<std::size_t>(spec_.head_units), 0.0f);
}

void EnsembleModel::check_batch(const Batch& batch) const {
  if (batch.height != spec_.input_shape[0] || batch.width != spec_.input_shape[1]) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch images are " + std::to_string(batch.height) + "x" + std::to_string(batch.width) +
                    ", model expects " + std::to_string(spec_.input_shape[0]) + "x" +
                    std::to_string(spec_.input_shape[1]));
  }
  if (batch.pixels.size() != batch.size() * batch.image_stride()) {
    throw Error(ErrorCode::kShapeMismatch, "batch pixel buffer does not match its label count");
  }
}

std::vector<float> EnsembleModel::frozen_features(const Batch& batch) const {
  return frozen_->extract(batch.pixels.data(), batch.size(), batch.height, batch.width);
}

FeatureTap EnsembleModel::feature_tap(const Batch& batch) const {
  check_batch(batch);
  FeatureTap tap;
  tap.batch = batch.size();
  tap.frozen = frozen_features(batch);
  tap.trainable = trainable_->extract(batch.pixels.data(), batch.size(), batch.height, batch.width);
  return tap;
}

std::vector<float> EnsembleModel::head_input(const Batch& batch) const {
  const FeatureTap tap = feature_tap(batch);
  const std::size_t width = head_input_width();
  std::vector<float> x(tap.batch * width);
  for (std::size_t i = 0; i < tap.batch; ++i) {
    std::copy_n(tap.frozen.data() + i * dims_.frozen, dims_.frozen, x.data() + i * width);
    std::copy_n(tap.trainable.data() + i * dims_.trainable, dims_.trainable,
                x.data() + i * width + dims_.frozen);
  }
  return x;
}

namespace {

Logits apply_head(const float* w, const float* b, const float* x, std::size_t width) {
  Logits z{b[0], b[1]};
  for (int k = 0; k < 2; ++k) {
    const float* row = w + static_cast<std::size_t>(k) * width;
    double acc = 0.0;
    for (std::size_t j = 0; j < width; ++j) acc += static_cast<double>(row[j]) * x[j];
    z[k] += acc;
  }
  return z;
}

}  // namespace

std::vector<Logits> EnsembleModel::head_logits(const std::vector<float>& x, std::size_t batch) const {
  const std::size_t width = head_input_width();
  if (x.size() != batch * width) throw Error(ErrorCode::kShapeMismatch, "head input width mismatch");
  std::vector<Logits> out(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    out[i] = apply_head(head_weight_.value.data(), head_bias_.value.data(), x.data() + i * width, width);
  }
  return out;
}

std::vector<Logits> EnsembleModel::logits(const Batch& batch) const {
  return head_logits(head_input(batch), batch.size());
}

std::vector<Parameter*> EnsembleModel::parameters(ParamGroup group) {
  switch (group) {
    case ParamGroup::kFrozen: return frozen_->parameters();
    case ParamGroup::kTrainable: return trainable_->parameters();
    case ParamGroup::kHead: return {&head_weight_, &head_bias_};
  }
  return {};
}

std::vector<const Parameter*> EnsembleModel::parameters(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kFrozen: return std::as_const(*frozen_).parameters();
    case ParamGroup::kTrainable: return std::as_const(*trainable_).parameters();
    case ParamGroup::kHead: return {&head_weight_, &head_bias_};
  }
  return {};
}

std::vector<Parameter*> EnsembleModel::optimized_parameters() {
  std::vector<Parameter*> out;
  if (trainable_->supports_training()) out = trainable_->parameters();
  out.push_back(&head_weight_);
  out.push_back(&head_bias_);
  return out;
}

std::vector<const Parameter*> EnsembleModel::all_parameters() const {
  std::vector<const Parameter*> out;
  for (auto g : {ParamGroup::kFrozen, ParamGroup::kTrainable, ParamGroup::kHead}) {
    const auto ps = parameters(g);
    out.insert(out.end(), ps.begin(), ps.end());
  }
  return out;
}

std::string EnsembleModel::group_checksum(ParamGroup group) const {
  switch (group) {
    case ParamGroup::kFrozen: return frozen_->fingerprint();
    case ParamGroup::kTrainable: return trainable_->fingerprint();
    case ParamGroup::kHead: {
      Sha256 h;
      for (const Parameter* p : parameters(ParamGroup::kHead)) {
        h.update(p->name);
        h.update(std::span(reinterpret_cast<const unsigned char*>(p->value.data()),
                           p->value.size() * sizeof(float)));
      }
      return h.finish();
    }
  }
  return {};
}

double EnsembleModel::loss(const Batch& batch, const LossOptions& options,
                           std::vector<std::vector<float>>* grads, BatchStats* stats) {
  check_batch(batch);
  const std::size_t n = batch.size();
  if (n == 0) throw Error(ErrorCode::kEmptyPipeline, "empty batch");
  const std::size_t width = head_input_width();
  const std::array<double, 2> cw = options.class_weights.value_or(std::array<double, 2>{1.0, 1.0});

  auto* tiny = dynamic_cast<TinyCnn*>(trainable_.get());
  const bool backprop_branch = grads != nullptr && tiny != nullptr;
  std::size_t branch_params = 0;
  if (grads) {
    const auto params = optimized_parameters();
    grads->resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) (*grads)[p].assign(params[p]->value.size(), 0.0f);
    branch_params = params.size() - 2;
  }

  const std::vector<float> frozen = frozen_features(batch);
  std::vector<float> trainable_all;
  if (!backprop_branch) {
    trainable_all = trainable_->extract(batch.pixels.data(), n, batch.height, batch.width);
  }

  std::vector<float> x(width);
  std::vector<float> dx(dims_.trainable);
  std::vector<std::vector<float>> branch_grads;
  if (backprop_branch) branch_grads.assign(grads->begin(), grads->begin() + static_cast<std::ptrdiff_t>(branch_params));
  TinyCnn::Tape tape;

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(frozen.data() + i * dims_.frozen, dims_.frozen, x.data());
    float* xt = x.data() + dims_.frozen;
    if (backprop_branch) {
      tiny->forward(batch.image(i), batch.height, batch.width, xt, &tape);
    } else {
      std::copy_n(trainable_all.data() + i * dims_.trainable, dims_.trainable, xt);
    }

    const Logits z = apply_head(head_weight_.value.data(), head_bias_.value.data(), x.data(), width);
    const int y = batch.labels[i];
    const double m = std::max(z[0], z[1]);
    const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
    const double sample_loss = cw[y] * (lse - z[y]);
    total += sample_loss;
    if (stats) {
      stats->loss_sum += sample_loss;
      stats->correct += predict_class(z) == y ? 1 : 0;
      ++stats->count;
    }
    if (!grads) continue;

    const auto p = softmax(z);
    std::array<double, 2> dz{};
    for (int k = 0; k < 2; ++k) dz[k] = cw[y] * (p[k] - (k == y ? 1.0 : 0.0)) / static_cast<double>(n);

    auto& gw = (*grads)[branch_params];
    auto& gb = (*grads)[branch_params + 1];
    for (int k = 0; k < 2; ++k) {
      float* row = gw.data() + static_cast<std::size_t>(k) * width;
      const auto dzk = static_cast<float>(dz[k]);
      for (std::size_t j = 0; j < width; ++j) row[j] += dzk * x[j];
      gb[k] += dzk;
    }
    if (backprop_branch) {
      const float* w0 = head_weight_.value.data() + dims_.frozen;
      const float* w1 = head_weight_.value.data() + width + dims_.frozen;
      for (std::size_t j = 0; j < dims_.trainable; ++j) {
        dx[j] = static_cast<float>(dz[0] * w0[j] + dz[1] * w1[j]);
      }
      tiny->backward(tape, dx.data(), branch_grads);
    }
  }
  if (backprop_branch) {
    for (std::size_t p = 0; p < branch_params; ++p) (*grads)[p] = std::move(branch_grads[p]);
  }
  return total / static_cast<double>(n);
}

EnsembleModel build_ensemble(const EnsembleSpec& spec, const BackboneLoadOptions& options) {
  spec.validate();
  BackboneLoadOptions opts = options;
  opts.input_height = spec.input_shape[0];
  opts.input_width = spec.input_shape[1];
  auto frozen = load_backbone(spec.frozen_branch, mix_seed(spec.init_seed, 1), opts);
  auto trainable = load_backbone(spec.trainable_branch, mix_seed(spec.init_seed, 2), opts);
  if (!trainable->supports_training()) {
    std::cerr << "warning: " << to_string(spec.trainable_branch.name)
              << " runs on an inference-only backend; only the dense head will be trained\n";
  }
  return EnsembleModel(spec, std::move(frozen), std::move(trainable));
}

}  // namespace colorguard

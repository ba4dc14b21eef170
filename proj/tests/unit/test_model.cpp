// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "colorguard/ensemble.hpp"
#include "colorguard/error.hpp"
#include "colorguard/tiny_cnn.hpp"
#include "fixtures.hpp"

namespace colorguard {
namespace {

using testing::random_batch;
using testing::tiny_spec;

double rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / denom;
}

TEST(Ensemble, TinyDimsAndHeadWidth) {
  const EnsembleModel m = build_ensemble(tiny_spec(32));
  EXPECT_EQ(m.feature_dims().frozen, 32u);
  EXPECT_EQ(m.feature_dims().trainable, 48u);
  EXPECT_EQ(m.head_input_width(), 80u);
}

TEST(Ensemble, FeatureTapConcatenationIsHeadInput) {
  const EnsembleModel m = build_ensemble(tiny_spec(32));
  const Batch b = random_batch(3, 32, 32, 5);
  const FeatureTap tap = m.feature_tap(b);
  const std::vector<float> head = m.head_input(b);
  const std::size_t w = m.head_input_width();
  ASSERT_EQ(head.size(), 3 * w);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 32; ++j) EXPECT_EQ(head[i * w + j], tap.frozen[i * 32 + j]);
    for (std::size_t j = 0; j < 48; ++j) EXPECT_EQ(head[i * w + 32 + j], tap.trainable[i * 48 + j]);
  }
}

TEST(Ensemble, ZeroBatchGivesFiniteLogitsAndUnitSoftmax) {
  const EnsembleModel m = build_ensemble(tiny_spec(32));
  Batch b = random_batch(4, 32, 32, 1);
  std::fill(b.pixels.begin(), b.pixels.end(), 0.0f);
  const auto logits = m.logits(b);
  ASSERT_EQ(logits.size(), 4u);
  for (const Logits& z : logits) {
    EXPECT_TRUE(std::isfinite(z[0]) && std::isfinite(z[1]));
    const auto p = softmax(z);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-6);
  }
}

TEST(Ensemble, BatchShapeMismatchRejected) {
  const EnsembleModel m = build_ensemble(tiny_spec(32));
  const Batch b = random_batch(2, 16, 16, 1);
  EXPECT_THROW(m.logits(b), Error);
}

TEST(Ensemble, FrozenParametersAreNotOptimized) {
  EnsembleModel m = build_ensemble(tiny_spec(32));
  for (const Parameter* p : m.parameters(ParamGroup::kFrozen)) EXPECT_FALSE(p->trainable);
  const auto opt = m.optimized_parameters();
  for (const Parameter* p : m.parameters(ParamGroup::kFrozen)) {
    EXPECT_EQ(std::find(opt.begin(), opt.end(), p), opt.end());
  }
  EXPECT_EQ(opt.size(), m.parameters(ParamGroup::kTrainable).size() + 2);
}

TEST(Ensemble, SameSeedSameWeights) {
  const EnsembleModel a = build_ensemble(tiny_spec(32, 9));
  const EnsembleModel b = build_ensemble(tiny_spec(32, 9));
  const EnsembleModel c = build_ensemble(tiny_spec(32, 10));
  EXPECT_EQ(a.group_checksum(ParamGroup::kHead), b.group_checksum(ParamGroup::kHead));
  EXPECT_EQ(a.group_checksum(ParamGroup::kFrozen), b.group_checksum(ParamGroup::kFrozen));
  EXPECT_NE(a.group_checksum(ParamGroup::kTrainable), c.group_checksum(ParamGroup::kTrainable));
}

TEST(Ensemble, TinyWithPretrainedWeightsRejected) {
  EnsembleSpec spec = tiny_spec(32);
  spec.frozen_branch.weights = WeightsOrigin::kImagenetPretrained;
  EXPECT_THROW(build_ensemble(spec), Error);
}

TEST(Ensemble, PretrainedWithoutCacheIsWeightsUnavailable) {
  EnsembleSpec spec;
  spec.frozen_branch = {BackboneName::kVgg16, WeightsOrigin::kImagenetPretrained};
  spec.trainable_branch = {BackboneName::kMobilenetV2, WeightsOrigin::kImagenetPretrained};
  BackboneLoadOptions opts;
  opts.cache_dir = "/nonexistent/colorguard-cache";
  try {
    build_ensemble(spec, opts);
    FAIL() << "expected WeightsUnavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWeightsUnavailable);
  }
}

TEST(Ensemble, ReferenceShapes) {
  EXPECT_EQ(reference_output_shape(BackboneName::kVgg16).flat_size(), 25088u);
  EXPECT_TRUE(reference_output_shape(BackboneName::kVgg16).spatial);
  EXPECT_EQ(reference_output_shape(BackboneName::kResnet50).flat_size(), 7u * 7u * 2048u);
  EXPECT_EQ(reference_output_shape(BackboneName::kMobilenetV2).flat_size(), 1280u);
  EXPECT_FALSE(reference_output_shape(BackboneName::kMobilenetV2).spatial);
  EXPECT_EQ(reference_output_shape(BackboneName::kTinyCnn).flat_size(), 32u);
}

TEST(Ensemble, SpecJsonRoundTrip) {
  EnsembleSpec spec = tiny_spec(64, 42);
  const nlohmann::json j = spec;
  EXPECT_EQ(j.get<EnsembleSpec>(), spec);
}

// Central differences on every head weight against the analytic gradient.
TEST(GradCheck, HeadWeights) {
  EnsembleModel m = build_ensemble(tiny_spec(32, 3));
  const Batch b = random_batch(4, 32, 32, 11);
  std::vector<std::vector<float>> grads;
  m.loss(b, {}, &grads);
  auto params = m.optimized_parameters();
  Parameter* w = params[params.size() - 2];
  const std::vector<float>& g = grads[grads.size() - 2];
  ASSERT_EQ(w->name, "head.weight");
  double worst = 0.0;
  for (std::size_t i = 0; i < w->value.size(); ++i) {
    const float orig = w->value[i];
    const float h = 1e-2f;
    w->value[i] = orig + h;
    const double lp = m.loss(b, {});
    w->value[i] = orig - h;
    const double lm = m.loss(b, {});
    w->value[i] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    if (std::abs(numeric) < 1e-7 && std::abs(g[i]) < 1e-7) continue;
    worst = std::max(worst, rel_error(numeric, g[i]));
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(GradCheck, ClassWeightedHead) {
  EnsembleModel m = build_ensemble(tiny_spec(32, 4));
  const Batch b = random_batch(4, 32, 32, 12);
  LossOptions opts;
  opts.class_weights = std::array<double, 2>{3.0, 1.0};
  std::vector<std::vector<float>> grads;
  m.loss(b, opts, &grads);
  auto params = m.optimized_parameters();
  Parameter* bias = params.back();
  for (std::size_t i = 0; i < 2; ++i) {
    const float orig = bias->value[i];
    bias->value[i] = orig + 1e-2f;
    const double lp = m.loss(b, opts);
    bias->value[i] = orig - 1e-2f;
    const double lm = m.loss(b, opts);
    bias->value[i] = orig;
    EXPECT_LE(rel_error((lp - lm) / 2e-2, grads.back()[i]), 1e-3);
  }
}

// Spot-check the trainable conv branch; ReLU kinks make a few entries noisy,
// so compare the gradient direction over a sample of coordinates.
TEST(GradCheck, TrainableBranchDirection) {
  EnsembleModel m = build_ensemble(tiny_spec(16, 5));
  const Batch b = random_batch(2, 16, 16, 13);
  std::vector<std::vector<float>> grads;
  m.loss(b, {}, &grads);
  auto params = m.optimized_parameters();
  for (std::size_t p = 0; p + 2 < params.size(); ++p) {
    Parameter* prm = params[p];
    double dot = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < prm->value.size(); i += 7) {
      const float orig = prm->value[i];
      const float h = 1e-3f;
      prm->value[i] = orig + h;
      const double lp = m.loss(b, {});
      prm->value[i] = orig - h;
      const double lm = m.loss(b, {});
      prm->value[i] = orig;
      const double numeric = (lp - lm) / (2.0 * h);
      dot += numeric * grads[p][i];
      na += static_cast<double>(grads[p][i]) * grads[p][i];
      nn += numeric * numeric;
    }
    if (na < 1e-20 && nn < 1e-20) continue;
    EXPECT_GT(dot / std::sqrt(na * nn), 0.99) << prm->name;
  }
}

}  // namespace
}  // namespace colorguard

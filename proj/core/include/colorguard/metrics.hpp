// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "colorguard/classifier.hpp"
#include "colorguard/manifest.hpp"
#include "colorguard/pipeline.hpp"

namespace colorguard {

// The detection target is the positive class.
inline constexpr Label kPositiveClass = Label::kColorized;

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  // truth / predicted are class indices (1 = colorized = positive).
  void add(int truth, int predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

// FP / (FP + TN). UndefinedRate without negatives.
double false_positive_rate(const ConfusionMatrix& cm);
// FN / (FN + TP). UndefinedRate without positives.
double false_negative_rate(const ConfusionMatrix& cm);

// Half total error rate: 0.5 * (FPR + FNR). UndefinedRate when either class
// is absent.
double hter(const ConfusionMatrix& cm);

// (TP + TN) / total. EmptyPipeline when total is 0.
double accuracy(const ConfusionMatrix& cm);

// Argmax predictions of the classifier over one pass of the pipeline.
// EmptyPipeline when the pipeline yields nothing.
ConfusionMatrix confusion(const Classifier& model, const Pipeline& pipe);

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "colorguard/preprocess.hpp"

namespace colorguard {

// Raw two-class scores; index 0 = natural, 1 = colorized.
using Logits = std::array<double, 2>;

// Anything that scores batches. Implementations must be safe to call
// concurrently from several threads.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<Logits> logits(const Batch& batch) const = 0;
};

// Numerically stable two-class softmax.
std::array<double, 2> softmax(const Logits& logits);

// argmax; ties resolve to natural (index 0).
int predict_class(const Logits& logits);

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "colorguard/backbone.hpp"

namespace colorguard {

enum class OptimizerKind { kAdam, kSgdMomentum };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  // grads[i] matches params[i]; the parameter list must be the same on
  // every call.
  virtual void step(std::span<Parameter* const> params, const std::vector<std::vector<float>>& grads) = 0;
};

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double momentum = 0.9;  // SGD
  double beta1 = 0.9;     // Adam
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSettings& settings);

}  // namespace colorguard

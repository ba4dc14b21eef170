// SPDX-License-Identifier: Apache-2.0

#include "colorguard/optimizer.hpp"

#include <cmath>
#include <string>

#include "colorguard/error.hpp"

namespace colorguard {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "ADAM" : "SGD_MOMENTUM";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "ADAM") return OptimizerKind::kAdam;
  if (text == "SGD_MOMENTUM") return OptimizerKind::kSgdMomentum;
  throw Error(ErrorCode::kInvalidArgument, "unknown optimizer '" + std::string(text) + "'");
}

namespace {

void check_sizes(std::span<Parameter* const> params, const std::vector<std::vector<float>>& grads) {
  if (params.size() != grads.size()) throw Error(ErrorCode::kShapeMismatch, "gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.size() != grads[i].size()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient size mismatch for " + params[i]->name);
    }
  }
}

class Adam final : public Optimizer {
 public:
  explicit Adam(const OptimizerSettings& s) : s_(s) {}

  void step(std::span<Parameter* const> params, const std::vector<std::vector<float>>& grads) override {
    check_sizes(params, grads);
    if (m_.empty()) {
      for (const Parameter* p : params) {
        m_.emplace_back(p->value.size(), 0.0);
        v_.emplace_back(p->value.size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(s_.beta1, t_);
    const double c2 = 1.0 - std::pow(s_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& w = params[i]->value;
      const auto& g = grads[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m_[i][j] = s_.beta1 * m_[i][j] + (1.0 - s_.beta1) * g[j];
        v_[i][j] = s_.beta2 * v_[i][j] + (1.0 - s_.beta2) * g[j] * g[j];
        const double update = s_.learning_rate * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + s_.epsilon);
        w[j] = static_cast<float>(w[j] - update);
      }
    }
  }

 private:
  OptimizerSettings s_;
  int t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

class SgdMomentum final : public Optimizer {
 public:
  explicit SgdMomentum(const OptimizerSettings& s) : s_(s) {}

  void step(std::span<Parameter* const> params, const std::vector<std::vector<float>>& grads) override {
    check_sizes(params, grads);
    if (velocity_.empty()) {
      for (const Parameter* p : params) velocity_.emplace_back(p->value.size(), 0.0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& w = params[i]->value;
      for (std::size_t j = 0; j < w.size(); ++j) {
        velocity_[i][j] = s_.momentum * velocity_[i][j] - s_.learning_rate * grads[i][j];
        w[j] = static_cast<float>(w[j] + velocity_[i][j]);
      }
    }
  }

 private:
  OptimizerSettings s_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSettings& settings) {
  if (!(settings.learning_rate >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be >= 0");
  }
  if (settings.kind == OptimizerKind::kAdam) return std::make_unique<Adam>(settings);
  return std::make_unique<SgdMomentum>(settings);
}

}  // namespace colorguard

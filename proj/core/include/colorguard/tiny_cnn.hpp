// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "colorguard/backbone.hpp"

namespace colorguard {

// Small trainable backbone: three 3x3 stride-2 conv + ReLU blocks followed by
// global average pooling. Runs fully in-process with analytic backward.
class TinyCnn final : public Backbone {
 public:
  static constexpr int kBlocks = 3;

  // Per-sample activations kept for the backward pass.
  struct Tape {
    std::array<std::vector<float>, kBlocks> cols;  // im2col input, [K, P]
    std::array<std::vector<float>, kBlocks> act;   // post-ReLU output, [C, P]
    std::array<int, kBlocks + 1> heights{};
    std::array<int, kBlocks + 1> widths{};
  };

  TinyCnn(BackboneName name, std::uint64_t init_seed);

  static std::array<int, kBlocks> channels_for(BackboneName name);

  BackboneId id() const override { return {name_, WeightsOrigin::kRandom}; }
  FeatureShape output_shape() const override;
  std::vector<float> extract(const float* images, std::size_t n, int height,
                             int width) const override;
  std::vector<Parameter*> parameters() override;
  std::vector<const Parameter*> parameters() const override;
  bool supports_training() const override { return true; }
  std::string fingerprint() const override;

  // One HWC image -> features (size output_shape().channels). The tape is
  // filled when non-null.
  void forward(const float* image, int height, int width, float* features, Tape* tape) const;

  // Accumulates parameter gradients (same order and sizes as parameters())
  // for dL/dfeatures of one sample.
  void backward(const Tape& tape, const float* dfeatures,
                std::vector<std::vector<float>>& grads) const;

 private:
  BackboneName name_;
  std::array<int, kBlocks> channels_;
  std::array<Parameter, kBlocks> weights_;  // [Cout, Cin*9]
  std::array<Parameter, kBlocks> biases_;   // [Cout]
};

}  // namespace colorguard

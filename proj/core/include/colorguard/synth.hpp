// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include <opencv2/core.hpp>

#include "colorguard/colorize.hpp"
#include "colorguard/manifest.hpp"

namespace colorguard {

struct SynthOptions {
  int width = 192;
  int height = 160;
  double sensor_noise = 7.0;     // per-channel Gaussian noise std, 8-bit levels
  double chroma_texture = 24.0;  // std of the correlated per-channel texture field
  double texture_sigma = 1.2;    // its correlation length in pixels
  std::string manifest_name = "synthetic";
  Split split = Split::kTrain;
  ColorizeOptions colorize;
};

// One procedurally generated "natural" photo-like image: a gradient
// background, textured shapes and independent per-channel sensor noise.
cv::Mat generate_natural_image(std::uint64_t seed, const SynthOptions& options = {});

// Writes out_dir/natural/<group>.png plus one pseudo-colorized derivative per
// method under out_dir/<METHOD>/<group>.png and out_dir/manifest.jsonl.
// Returns the manifest (absolute image paths). Throws IoFailure.
DatasetManifest generate_synthetic_corpus(int n_groups, const std::filesystem::path& out_dir,
                                          std::uint64_t seed, const SynthOptions& options = {});

}  // namespace colorguard

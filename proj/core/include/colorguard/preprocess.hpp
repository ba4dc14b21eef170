// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>
#include <opencv2/core.hpp>

namespace colorguard {

struct PreprocessConfig {
  int target_height = 224;
  int target_width = 224;
  double scale = 1.0 / 255.0;
  std::uint64_t shuffle_seed = 0;
  // Full-epoch permutation when the manifest fits, windowed shuffle otherwise.
  std::size_t shuffle_buffer = 100000;
  bool cache_enabled = true;
  int prefetch_depth = 2;   // batches; 0 decodes synchronously
  int decode_workers = 1;
  // Optional per-channel (x*scale - mean) / std applied after scaling, for
  // backbones that expect their native input convention. Off by default;
  // when set, pixels are no longer confined to [0, 1].
  std::optional<std::array<double, 3>> input_mean;
  std::optional<std::array<double, 3>> input_std;

  // Throws InvalidArgument.
  void validate() const;
  bool operator==(const PreprocessConfig&) const = default;
};

void to_json(nlohmann::json& j, const PreprocessConfig& cfg);
void from_json(const nlohmann::json& j, PreprocessConfig& cfg);

// Plain bilinear resize to (target_height, target_width); aspect ratio is
// not preserved. Input and output are CV_8UC3.
cv::Mat resize(const cv::Mat& rgb, const PreprocessConfig& cfg);

// CV_8UC3 -> CV_32FC3 with out = in * scale (then the optional mean/std).
cv::Mat normalize(const cv::Mat& rgb, const PreprocessConfig& cfg);

// A batch of normalized images in NHWC layout.
struct Batch {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;   // [size, height, width, 3]
  std::vector<int> labels;     // 0 = natural, 1 = colorized
  std::vector<std::size_t> record_indices;

  std::size_t size() const { return labels.size(); }
  std::size_t image_stride() const { return static_cast<std::size_t>(height) * width * 3; }
  const float* image(std::size_t i) const { return pixels.data() + i * image_stride(); }

  bool operator==(const Batch&) const = default;
};

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#include "colorguard/preprocess.hpp"

#include <string>

#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "colorguard/error.hpp"

namespace colorguard {

void PreprocessConfig::validate() const {
  if (target_height <= 0 || target_width <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "target size must be positive");
  }
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale must be > 0");
  if (shuffle_buffer == 0) throw Error(ErrorCode::kInvalidArgument, "shuffle_buffer must be >= 1");
  if (prefetch_depth < 0) throw Error(ErrorCode::kInvalidArgument, "prefetch_depth must be >= 0");
  if (decode_workers < 1) throw Error(ErrorCode::kInvalidArgument, "decode_workers must be >= 1");
  if (input_mean.has_value() != input_std.has_value()) {
    throw Error(ErrorCode::kInvalidArgument, "input_mean and input_std must be given together");
  }
  if (input_std) {
    for (double s : *input_std) {
      if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "input_std entries must be > 0");
    }
  }
}

void to_json(nlohmann::json& j, const PreprocessConfig& cfg) {
  j = nlohmann::json{{"target_height", cfg.target_height},
                     {"target_width", cfg.target_width},
                     {"scale", cfg.scale},
                     {"interpolation", "bilinear"},
                     {"shuffle_seed", cfg.shuffle_seed},
                     {"shuffle_buffer", cfg.shuffle_buffer},
                     {"cache_enabled", cfg.cache_enabled},
                     {"prefetch_depth", cfg.prefetch_depth},
                     {"decode_workers", cfg.decode_workers}};
  if (cfg.input_mean) j["input_mean"] = *cfg.input_mean;
  if (cfg.input_std) j["input_std"] = *cfg.input_std;
}

void from_json(const nlohmann::json& j, PreprocessConfig& cfg) {
  PreprocessConfig d;
  cfg.target_height = j.value("target_height", d.target_height);
  cfg.target_width = j.value("target_width", d.target_width);
  cfg.scale = j.value("scale", d.scale);
  cfg.shuffle_seed = j.value("shuffle_seed", d.shuffle_seed);
  cfg.shuffle_buffer = j.value("shuffle_buffer", d.shuffle_buffer);
  cfg.cache_enabled = j.value("cache_enabled", d.cache_enabled);
  cfg.prefetch_depth = j.value("prefetch_depth", d.prefetch_depth);
  cfg.decode_workers = j.value("decode_workers", d.decode_workers);
  if (j.contains("interpolation") && j.at("interpolation") != "bilinear") {
    throw Error(ErrorCode::kInvalidArgument, "only bilinear interpolation is supported");
  }
  cfg.input_mean.reset();
  cfg.input_std.reset();
  if (j.contains("input_mean")) cfg.input_mean = j.at("input_mean").get<std::array<double, 3>>();
  if (j.contains("input_std")) cfg.input_std = j.at("input_std").get<std::array<double, 3>>();
}

cv::Mat resize(const cv::Mat& rgb, const PreprocessConfig& cfg) {
  if (rgb.empty()) throw Error(ErrorCode::kDecodeFailure, "empty image");
  if (rgb.type() != CV_8UC3) {
    throw Error(ErrorCode::kUnsupportedChannelCount, "resize expects an 8-bit 3-channel image");
  }
  const cv::Size target(cfg.target_width, cfg.target_height);
  if (rgb.size() == target) return rgb.clone();
  cv::Mat out;
  cv::resize(rgb, out, target, 0, 0, cv::INTER_LINEAR);
  return out;
}

cv::Mat normalize(const cv::Mat& rgb, const PreprocessConfig& cfg) {
  if (rgb.type() != CV_8UC3) {
    throw Error(ErrorCode::kUnsupportedChannelCount, "normalize expects an 8-bit 3-channel image");
  }
  // Lookup table keeps v * scale exact per level, so 255 maps to 1.0 and
  // nothing exceeds it through float rounding.
  std::array<std::array<float, 256>, 3> lut{};
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < 256; ++v) {
      double x = v * cfg.scale;
      if (cfg.input_mean) x = (x - (*cfg.input_mean)[c]) / (*cfg.input_std)[c];
      lut[c][v] = static_cast<float>(x);
    }
  }
  cv::Mat out(rgb.size(), CV_32FC3);
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* src = rgb.ptr<cv::Vec3b>(y);
    auto* dst = out.ptr<cv::Vec3f>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      dst[x] = cv::Vec3f(lut[0][src[x][0]], lut[1][src[x][1]], lut[2][src[x][2]]);
    }
  }
  return out;
}

}  // namespace colorguard

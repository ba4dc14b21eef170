// SPDX-License-Identifier: Apache-2.0

#include "colorguard/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "colorguard/error.hpp"
#include "colorguard/image_io.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

namespace fs = std::filesystem;

namespace {

cv::Scalar random_color(Rng& rng) {
  return cv::Scalar(rng.uniform(20, 235), rng.uniform(20, 235), rng.uniform(20, 235));
}

}  // namespace

cv::Mat generate_natural_image(std::uint64_t seed, const SynthOptions& options) {
  Rng rng(seed);
  const int w = options.width;
  const int h = options.height;

  // Float canvas so texture and noise are added before a single rounding.
  cv::Mat canvas(h, w, CV_32FC3);
  const cv::Scalar top = random_color(rng);
  const cv::Scalar bottom = random_color(rng);
  for (int y = 0; y < h; ++y) {
    const double t = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    const cv::Vec3f c(static_cast<float>(top[0] * (1 - t) + bottom[0] * t),
                      static_cast<float>(top[1] * (1 - t) + bottom[1] * t),
                      static_cast<float>(top[2] * (1 - t) + bottom[2] * t));
    auto* row = canvas.ptr<cv::Vec3f>(y);
    for (int x = 0; x < w; ++x) row[x] = c;
  }

  const int shapes = 4 + static_cast<int>(rng.below(5));
  for (int s = 0; s < shapes; ++s) {
    const cv::Scalar color = random_color(rng);
    const cv::Point center(static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h)));
    const int rx = 8 + static_cast<int>(rng.below(std::max(1, w / 3)));
    const int ry = 8 + static_cast<int>(rng.below(std::max(1, h / 3)));
    if (rng.below(2) == 0) {
      const double angle = rng.uniform(0.0, 180.0);
      cv::ellipse(canvas, center, cv::Size(rx, ry), angle, 0, 360, color, cv::FILLED, cv::LINE_8);
    } else {
      cv::rectangle(canvas, cv::Point(center.x - rx, center.y - ry),
                    cv::Point(center.x + rx, center.y + ry), color, cv::FILLED, cv::LINE_8);
    }
  }

  // Low-frequency luminance texture.
  const double fx = rng.uniform(0.02, 0.12);
  const double fy = rng.uniform(0.02, 0.12);
  const double amp = rng.uniform(6.0, 18.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  // Fine per-channel texture: surface detail whose chroma the colorizers cannot regenerate.
  cv::Mat grain(h, w, CV_32FC3);
  for (int y = 0; y < h; ++y) {
    auto* row = grain.ptr<cv::Vec3f>(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) row[x][c] = static_cast<float>(rng.normal());
    }
  }
  if (options.texture_sigma > 0.0) {
    cv::GaussianBlur(grain, grain, cv::Size(), options.texture_sigma, options.texture_sigma, cv::BORDER_REFLECT101);
    cv::Scalar mean, stddev;
    cv::meanStdDev(grain.reshape(1), mean, stddev);
    if (stddev[0] > 0) grain *= options.chroma_texture / stddev[0];
  } else {
    grain *= options.chroma_texture;
  }

  cv::Mat out(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    const auto* src = canvas.ptr<cv::Vec3f>(y);
    const auto* gr = grain.ptr<cv::Vec3f>(y);
    auto* dst = out.ptr<cv::Vec3b>(y);
    for (int x = 0; x < w; ++x) {
      const double tex = amp * std::sin(fx * x + phase) * std::cos(fy * y);
      cv::Vec3b px;
      for (int c = 0; c < 3; ++c) {
        const double v = src[x][c] + tex + gr[x][c] + options.sensor_noise * rng.normal();
        px[c] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
      dst[x] = px;
    }
  }
  return out;
}

DatasetManifest generate_synthetic_corpus(int n_groups, const fs::path& out_dir, std::uint64_t seed,
                                          const SynthOptions& options) {
  if (n_groups < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_groups must be >= 1, got " + std::to_string(n_groups));
  }
  if (options.width < 1 || options.height < 1) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic image size must be positive");
  }
  const fs::path root = fs::absolute(out_dir).lexically_normal();
  std::error_code ec;
  fs::create_directories(root / "natural", ec);
  for (auto m : kAllColorizeMethods) fs::create_directories(root / std::string(to_string(m)), ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + root.string() + ": " + ec.message());

  DatasetManifest manifest{options.manifest_name, seed, false, {}};
  manifest.records.reserve(static_cast<std::size_t>(n_groups) * (1 + kColorizedPerNatural));
  for (int g = 0; g < n_groups; ++g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "g%06d", g);
    const std::string group = buf;
    const std::uint64_t group_seed = mix_seed(seed, static_cast<std::uint64_t>(g));

    const cv::Mat natural = generate_natural_image(group_seed, options);
    const fs::path natural_path = root / "natural" / (group + ".png");
    write_rgb(natural_path, natural);
    manifest.records.push_back(
        {natural_path, Label::kNatural, std::string(kNoColorizer), group, options.split});

    for (auto m : kAllColorizeMethods) {
      const cv::Mat colored = pseudo_colorize(natural, m, mix_seed(group_seed, 7), options.colorize);
      const fs::path path = root / std::string(to_string(m)) / (group + ".png");
      write_rgb(path, colored);
      manifest.records.push_back({path, Label::kColorized, std::string(to_string(m)), group, options.split});
    }
  }
  validate(manifest);
  save_manifest(root / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace colorguard

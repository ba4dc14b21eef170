// SPDX-License-Identifier: Apache-2.0

#include "colorguard/colorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "colorguard/error.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

namespace {

constexpr float kWr = 0.299f;
constexpr float kWg = 0.587f;
constexpr float kWb = 0.114f;
constexpr float kCbScale = 0.564f;
constexpr float kCrScale = 0.713f;

void require_rgb8(const cv::Mat& rgb) {
  if (rgb.empty() || rgb.type() != CV_8UC3) {
    throw Error(ErrorCode::kUnsupportedChannelCount,
                "expected an 8-bit 3-channel image, got " + std::to_string(rgb.channels()) +
                    " channel(s)");
  }
}

struct Chroma {
  float cb;
  float cr;
};

// Plain Lloyd iterations with k-means++ seeding on a strided subsample.
std::vector<Chroma> chroma_palette(const cv::Mat& cb, const cv::Mat& cr, int k, Rng& rng) {
  std::vector<Chroma> samples;
  const int total = cb.rows * cb.cols;
  const int stride = std::max(1, total / 4096);
  for (int i = 0; i < total; i += stride) {
    samples.push_back({cb.ptr<float>()[i], cr.ptr<float>()[i]});
  }
  auto dist2 = [](Chroma a, Chroma b) {
    const float dx = a.cb - b.cb;
    const float dy = a.cr - b.cr;
    return dx * dx + dy * dy;
  };

  std::vector<Chroma> centers;
  centers.push_back(samples[rng.below(samples.size())]);
  std::vector<double> d2(samples.size(), std::numeric_limits<double>::max());
  while (static_cast<int>(centers.size()) < k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      d2[i] = std::min(d2[i], static_cast<double>(dist2(samples[i], centers.back())));
      sum += d2[i];
    }
    if (sum <= 0.0) break;  // fewer distinct chroma values than k
    double target = rng.uniform() * sum;
    std::size_t pick = samples.size() - 1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      target -= d2[i];
      if (target <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(samples[pick]);
  }

  std::vector<int> assign(samples.size(), 0);
  for (int iter = 0; iter < 12; ++iter) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      int best = 0;
      float best_d = dist2(samples[i], centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c) {
        const float d = dist2(samples[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      assign[i] = best;
    }
    std::vector<double> acc_cb(centers.size(), 0.0), acc_cr(centers.size(), 0.0);
    std::vector<int> n(centers.size(), 0);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      acc_cb[assign[i]] += samples[i].cb;
      acc_cr[assign[i]] += samples[i].cr;
      ++n[assign[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (n[c] > 0) {
        centers[c] = {static_cast<float>(acc_cb[c] / n[c]), static_cast<float>(acc_cr[c] / n[c])};
      }
    }
  }
  return centers;
}

void palette_quant(cv::Mat& cb, cv::Mat& cr, const ColorizeOptions& opt, Rng& rng) {
  if (opt.palette_presmooth > 0.0) {
    cv::GaussianBlur(cb, cb, cv::Size(0, 0), opt.palette_presmooth, 0, cv::BORDER_REFLECT);
    cv::GaussianBlur(cr, cr, cv::Size(0, 0), opt.palette_presmooth, 0, cv::BORDER_REFLECT);
  }
  const auto centers = chroma_palette(cb, cr, std::max(1, opt.palette_size), rng);
  float* pb = cb.ptr<float>();
  float* pr = cr.ptr<float>();
  const int total = cb.rows * cb.cols;
  for (int i = 0; i < total; ++i) {
    std::size_t best = 0;
    float best_d = std::numeric_limits<float>::max();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const float dx = pb[i] - centers[c].cb;
      const float dy = pr[i] - centers[c].cr;
      const float d = dx * dx + dy * dy;
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    pb[i] = centers[best].cb;
    pr[i] = centers[best].cr;
  }
}

void chroma_blur(cv::Mat& cb, cv::Mat& cr, const ColorizeOptions& opt, Rng& rng) {
  const double sigma = opt.blur_sigma + 2.0 * rng.uniform();
  cv::GaussianBlur(cb, cb, cv::Size(0, 0), sigma, 0, cv::BORDER_REFLECT);
  cv::GaussianBlur(cr, cr, cv::Size(0, 0), sigma, 0, cv::BORDER_REFLECT);
}

// Chroma hue becomes a smooth function of local luminance, the way a
// colorizer predicts color from gray; saturation is kept only at low detail.
void hue_remap(const cv::Mat& luma, cv::Mat& cb, cv::Mat& cr, const ColorizeOptions& opt, Rng& rng) {
  const double phase = 2.0 * std::numbers::pi * rng.uniform();
  const double cycles = rng.uniform(0.5, 1.5);
  cv::Mat smooth_luma;
  cv::GaussianBlur(luma, smooth_luma, cv::Size(0, 0), opt.remap_sigma, 0, cv::BORDER_REFLECT);
  cv::Mat magnitude;
  cv::magnitude(cb, cr, magnitude);
  cv::GaussianBlur(magnitude, magnitude, cv::Size(0, 0), opt.remap_sigma, 0, cv::BORDER_REFLECT);

  const int total = luma.rows * luma.cols;
  const float* pl = smooth_luma.ptr<float>();
  const float* pm = magnitude.ptr<float>();
  float* pb = cb.ptr<float>();
  float* pr = cr.ptr<float>();
  for (int i = 0; i < total; ++i) {
    const double hue = phase + 2.0 * std::numbers::pi * cycles * (pl[i] / 255.0);
    pb[i] = static_cast<float>(pm[i] * std::cos(hue));
    pr[i] = static_cast<float>(pm[i] * std::sin(hue));
  }
}

}  // namespace

std::string_view to_string(ColorizeMethod method) {
  switch (method) {
    case ColorizeMethod::kPaletteQuant: return "PALETTE_QUANT";
    case ColorizeMethod::kChromaBlur: return "CHROMA_BLUR";
    case ColorizeMethod::kHueRemap: return "HUE_REMAP";
  }
  return "PALETTE_QUANT";
}

ColorizeMethod parse_colorize_method(std::string_view text) {
  for (auto m : kAllColorizeMethods) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown colorize method '" + std::string(text) + "'");
}

LumaChroma split_luma_chroma(const cv::Mat& rgb) {
  require_rgb8(rgb);
  LumaChroma out{cv::Mat(rgb.size(), CV_32F), cv::Mat(rgb.size(), CV_32F), cv::Mat(rgb.size(), CV_32F)};
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* src = rgb.ptr<cv::Vec3b>(y);
    float* pl = out.luma.ptr<float>(y);
    float* pb = out.cb.ptr<float>(y);
    float* pr = out.cr.ptr<float>(y);
    for (int x = 0; x < rgb.cols; ++x) {
      const float r = src[x][0];
      const float g = src[x][1];
      const float b = src[x][2];
      const float l = kWr * r + kWg * g + kWb * b;
      pl[x] = l;
      pb[x] = (b - l) * kCbScale;
      pr[x] = (r - l) * kCrScale;
    }
  }
  return out;
}

cv::Mat merge_luma_chroma(const cv::Mat& luma, const cv::Mat& cb, const cv::Mat& cr) {
  cv::Mat rgb(luma.size(), CV_8UC3);
  for (int y = 0; y < luma.rows; ++y) {
    const float* pl = luma.ptr<float>(y);
    const float* pb = cb.ptr<float>(y);
    const float* pr = cr.ptr<float>(y);
    auto* dst = rgb.ptr<cv::Vec3b>(y);
    for (int x = 0; x < luma.cols; ++x) {
      const float l = std::clamp(pl[x], 0.0f, 255.0f);
      // Offsets from luma; G is solved from the luma equation so that
      // 0.299 R + 0.587 G + 0.114 B == l for any chroma scale s.
      const float dr = pr[x] / kCrScale;
      const float db = pb[x] / kCbScale;
      const float dg = -(kWr * dr + kWb * db) / kWg;
      float s = 1.0f;
      for (float d : {dr, dg, db}) {
        if (l + d > 255.0f) s = std::min(s, (255.0f - l) / d);
        if (l + d < 0.0f) s = std::min(s, -l / d);
      }
      s = std::max(s, 0.0f);
      const auto to_u8 = [](float v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 255.0f)));
      };
      dst[x] = cv::Vec3b(to_u8(l + s * dr), to_u8(l + s * dg), to_u8(l + s * db));
    }
  }
  return rgb;
}

cv::Mat pseudo_colorize(const cv::Mat& rgb, ColorizeMethod method, std::uint64_t seed,
                        const ColorizeOptions& options) {
  require_rgb8(rgb);
  LumaChroma lc = split_luma_chroma(rgb);
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(method) + 101));
  switch (method) {
    case ColorizeMethod::kPaletteQuant: palette_quant(lc.cb, lc.cr, options, rng); break;
    case ColorizeMethod::kChromaBlur: chroma_blur(lc.cb, lc.cr, options, rng); break;
    case ColorizeMethod::kHueRemap: hue_remap(lc.luma, lc.cb, lc.cr, options, rng); break;
  }
  return merge_luma_chroma(lc.luma, lc.cb, lc.cr);
}

}  // namespace colorguard

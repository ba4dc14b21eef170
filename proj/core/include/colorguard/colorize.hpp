// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <opencv2/core.hpp>

namespace colorguard {

// Desk-scale stand-ins for automatic colorization networks. Each keeps the
// luminance of the input and regenerates its chroma, leaving the kind of
// smooth, low-detail chroma that colorized images are known for. They are
// not reimplementations of any published colorizer.
enum class ColorizeMethod { kPaletteQuant, kChromaBlur, kHueRemap };

inline constexpr std::array<ColorizeMethod, 3> kAllColorizeMethods = {
    ColorizeMethod::kPaletteQuant, ColorizeMethod::kChromaBlur, ColorizeMethod::kHueRemap};

std::string_view to_string(ColorizeMethod method);  // "PALETTE_QUANT", ...
ColorizeMethod parse_colorize_method(std::string_view text);

struct ColorizeOptions {
  int palette_size = 8;              // PALETTE_QUANT chroma palette entries
  double palette_presmooth = 1.5;    // chroma blur sigma before quantisation
  double blur_sigma = 4.0;           // CHROMA_BLUR base sigma (seed adds up to +2)
  double remap_sigma = 4.0;          // HUE_REMAP smoothing of luminance and saturation
};

// Input and output are CV_8UC3 RGB. Deterministic in (image, method, seed).
// Throws UnsupportedChannelCount for anything but three 8-bit channels.
cv::Mat pseudo_colorize(const cv::Mat& rgb, ColorizeMethod method, std::uint64_t seed,
                        const ColorizeOptions& options = {});

// BT.601 luma and centred chroma (Cb, Cr) in float, the split the colorizers
// operate on. Luma uses the same weights as an RGB-to-gray conversion.
struct LumaChroma {
  cv::Mat luma;  // CV_32F
  cv::Mat cb;    // CV_32F, 0 for neutral gray
  cv::Mat cr;    // CV_32F
};

LumaChroma split_luma_chroma(const cv::Mat& rgb);

// Recombines luma and chroma into RGB. Chroma that would leave the RGB
// gamut is scaled toward gray per pixel so luma survives exactly up to
// 8-bit rounding.
cv::Mat merge_luma_chroma(const cv::Mat& luma, const cv::Mat& cb, const cv::Mat& cr);

}  // namespace colorguard

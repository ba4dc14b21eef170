// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include "colorguard/colorize.hpp"
#include "colorguard/rng.hpp"
#include "colorguard/synth.hpp"
#include "fixtures.hpp"

namespace colorguard {
namespace {

using testing::error_code_of;

cv::Mat random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 256) {
  Rng rng(seed);
  cv::Mat img(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto& px = img.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) px[c] = static_cast<unsigned char>(lo + rng.below(hi - lo));
    }
  }
  return img;
}

// Independent BT.601 luma from the 8-bit channels.
double gray(const cv::Vec3b& px) { return 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]; }

double mean_luma_error(const cv::Mat& a, const cv::Mat& b) {
  double sum = 0.0;
  for (int y = 0; y < a.rows; ++y) {
    for (int x = 0; x < a.cols; ++x) sum += std::abs(gray(a.at<cv::Vec3b>(y, x)) - gray(b.at<cv::Vec3b>(y, x)));
  }
  return sum / (a.rows * a.cols);
}

TEST(Colorize, GrayIsFixedPointOfChromaBlur) {
  for (int v : {0, 37, 128, 255}) {
    const auto u = static_cast<unsigned char>(v);
    const cv::Mat img = testing::solid_rgb(17, 11, {u, u, u});
    const cv::Mat out = pseudo_colorize(img, ColorizeMethod::kChromaBlur, 3);
    EXPECT_EQ(cv::norm(img, out, cv::NORM_INF), 0.0) << v;
  }
}

TEST(Colorize, DeterministicPerMethodAndSeed) {
  const cv::Mat img = generate_natural_image(5);
  for (ColorizeMethod m : kAllColorizeMethods) {
    const cv::Mat a = pseudo_colorize(img, m, 42);
    const cv::Mat b = pseudo_colorize(img, m, 42);
    EXPECT_EQ(cv::norm(a, b, cv::NORM_INF), 0.0) << to_string(m);
  }
}

TEST(Colorize, ChangesChroma) {
  const cv::Mat img = generate_natural_image(6);
  for (ColorizeMethod m : kAllColorizeMethods) {
    EXPECT_GT(cv::norm(img, pseudo_colorize(img, m, 1), cv::NORM_L1), 0.0) << to_string(m);
  }
}

// Property: luminance survives every method within 2 levels on average.
TEST(Colorize, PreservesLuminance) {
  Rng gen(77);
  for (int trial = 0; trial < 12; ++trial) {
    const cv::Mat img = trial % 2 == 0 ? random_image(40, 30, gen.next()) : generate_natural_image(gen.next());
    for (ColorizeMethod m : kAllColorizeMethods) {
      const cv::Mat out = pseudo_colorize(img, m, gen.next());
      ASSERT_EQ(out.size(), img.size());
      ASSERT_EQ(out.type(), CV_8UC3);
      EXPECT_LE(mean_luma_error(img, out), 2.0) << to_string(m) << " trial " << trial;
    }
  }
}

// Brute force: group output chroma pairs so that pairs within rounding
// distance of a representative share a bin; K=8 must give at most 8 bins.
TEST(Colorize, PaletteQuantUsesAtMostEightChromaBins) {
  // Mid-range values keep every palette colour inside the RGB gamut.
  const cv::Mat img = random_image(48, 40, 8, 70, 190);
  const cv::Mat out = pseudo_colorize(img, ColorizeMethod::kPaletteQuant, 8);
  std::vector<std::pair<double, double>> reps;
  for (int y = 0; y < out.rows; ++y) {
    for (int x = 0; x < out.cols; ++x) {
      const auto px = out.at<cv::Vec3b>(y, x);
      const double l = gray(px);
      const double cb = (px[2] - l) * 0.564;
      const double cr = (px[0] - l) * 0.713;
      bool found = false;
      for (const auto& [b, r] : reps) {
        if (std::hypot(cb - b, cr - r) <= 1.5) {
          found = true;
          break;
        }
      }
      if (!found) reps.emplace_back(cb, cr);
    }
  }
  EXPECT_LE(reps.size(), 8u);
  EXPECT_GE(reps.size(), 2u);
}

TEST(Colorize, UnsupportedChannelCount) {
  const cv::Mat g(8, 8, CV_8UC1, cv::Scalar(3));
  EXPECT_EQ(error_code_of([&] { pseudo_colorize(g, ColorizeMethod::kHueRemap, 1); }),
            ErrorCode::kUnsupportedChannelCount);
  const cv::Mat rgba(8, 8, CV_8UC4, cv::Scalar(3, 3, 3, 3));
  EXPECT_EQ(error_code_of([&] { pseudo_colorize(rgba, ColorizeMethod::kChromaBlur, 1); }),
            ErrorCode::kUnsupportedChannelCount);
}

TEST(Colorize, NamesRoundTrip) {
  for (ColorizeMethod m : kAllColorizeMethods) EXPECT_EQ(parse_colorize_method(to_string(m)), m);
  EXPECT_EQ(error_code_of([] { parse_colorize_method("SEPIA"); }), ErrorCode::kInvalidArgument);
}

TEST(LumaChroma, MergeInvertsSplitWithinRounding) {
  const cv::Mat img = random_image(20, 20, 4);
  const LumaChroma lc = split_luma_chroma(img);
  const cv::Mat back = merge_luma_chroma(lc.luma, lc.cb, lc.cr);
  EXPECT_LE(cv::norm(img, back, cv::NORM_INF), 1.0);
}

}  // namespace
}  // namespace colorguard

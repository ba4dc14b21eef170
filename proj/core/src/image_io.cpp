// SPDX-License-Identifier: Apache-2.0

#include "colorguard/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "colorguard/error.hpp"

namespace colorguard {

cv::Mat read_rgb(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error(ErrorCode::kDecodeFailure, "cannot decode " + path.string());
  if (raw.depth() != CV_8U) {
    throw Error(ErrorCode::kDecodeFailure, "only 8-bit images are supported: " + path.string());
  }
  cv::Mat rgb;
  switch (raw.channels()) {
    case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
    default:
      throw Error(ErrorCode::kUnsupportedChannelCount,
                  std::to_string(raw.channels()) + " channel image " + path.string());
  }
  return rgb;
}

void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb) {
  if (rgb.type() != CV_8UC3) {
    throw Error(ErrorCode::kUnsupportedChannelCount, "write_rgb expects CV_8UC3");
  }
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kIoFailure, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

bool is_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

namespace colorguard {

// All in-memory images are CV_8UC3 in RGB channel order.

// Decodes PNG/JPEG into RGB. Grayscale files are rejected with
// UnsupportedChannelCount, undecodable ones with DecodeFailure.
cv::Mat read_rgb(const std::filesystem::path& path);

// Writes an RGB image; the format follows the extension. Throws IoFailure.
void write_rgb(const std::filesystem::path& path, const cv::Mat& rgb);

bool is_image_file(const std::filesystem::path& path);

}  // namespace colorguard

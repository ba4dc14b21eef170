// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "colorguard/ensemble.hpp"
#include "colorguard/error.hpp"
#include "colorguard/manifest.hpp"
#include "colorguard/preprocess.hpp"

namespace colorguard::testing {

// Fresh empty directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

// Random image with values in [0,1], NHWC.
Batch random_batch(std::size_t n, int height, int width, std::uint64_t seed);

EnsembleSpec tiny_spec(int side, std::uint64_t init_seed = 1);

cv::Mat solid_rgb(int width, int height, cv::Vec3b color);

std::string read_file(const std::filesystem::path& path);

// Runs fn and returns the ErrorCode it threw; fails the test if it threw nothing.
std::optional<ErrorCode> error_code_of(const std::function<void()>& fn);

// natural/<stem>.png plus one directory per colorizer id, same stems.
struct FolderCorpus {
  std::filesystem::path natural;
  std::map<std::string, std::filesystem::path> colorized;
};
FolderCorpus write_folder_corpus(const std::filesystem::path& root, int n_naturals,
                                 const std::vector<std::string>& colorizer_ids);

// In-memory manifest with the given number of 1:3 groups; paths are fake.
DatasetManifest fake_manifest(int groups, const std::string& name = "fake");

}  // namespace colorguard::testing

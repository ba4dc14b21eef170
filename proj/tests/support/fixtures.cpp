// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "colorguard/image_io.hpp"
#include "colorguard/rng.hpp"

namespace colorguard::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("cg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Batch random_batch(std::size_t n, int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.height = height;
  b.width = width;
  b.pixels.resize(n * static_cast<std::size_t>(height) * width * 3);
  for (float& v : b.pixels) v = static_cast<float>(rng.uniform());
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(static_cast<int>(i % 2));
    b.record_indices.push_back(i);
  }
  return b;
}

EnsembleSpec tiny_spec(int side, std::uint64_t init_seed) {
  EnsembleSpec spec;
  spec.input_shape = {side, side, 3};
  spec.init_seed = init_seed;
  return spec;
}

cv::Mat solid_rgb(int width, int height, cv::Vec3b color) {
  return cv::Mat(height, width, CV_8UC3, cv::Scalar(color[0], color[1], color[2]));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<ErrorCode> error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

FolderCorpus write_folder_corpus(const fs::path& root, int n_naturals,
                                 const std::vector<std::string>& colorizer_ids) {
  FolderCorpus c;
  c.natural = root / "natural";
  fs::create_directories(c.natural);
  for (const auto& id : colorizer_ids) {
    c.colorized[id] = root / id;
    fs::create_directories(c.colorized[id]);
  }
  for (int i = 0; i < n_naturals; ++i) {
    const std::string stem = "img" + std::to_string(i);
    const auto v = static_cast<unsigned char>(20 * i);
    write_rgb(c.natural / (stem + ".png"), solid_rgb(8, 6, {v, 100, 200}));
    for (const auto& [id, dir] : c.colorized) write_rgb(dir / (stem + ".png"), solid_rgb(8, 6, {100, v, 50}));
  }
  return c;
}

DatasetManifest fake_manifest(int groups, const std::string& name) {
  DatasetManifest m{name, 1, false, {}};
  static const char* kIds[] = {"A", "B", "C"};
  for (int g = 0; g < groups; ++g) {
    const std::string group = "g" + std::to_string(g);
    m.records.push_back({"/data/natural/" + group + ".png", Label::kNatural, std::string(kNoColorizer), group,
                         Split::kTrain});
    for (const char* id : kIds) {
      m.records.push_back({std::string("/data/") + id + "/" + group + ".png", Label::kColorized, id, group,
                           Split::kTrain});
    }
  }
  return m;
}

}  // namespace colorguard::testing

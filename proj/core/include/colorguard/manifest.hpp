// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace colorguard {

// Encoded as the class index everywhere: NATURAL=0, COLORIZED=1.
enum class Label : int { kNatural = 0, kColorized = 1 };
enum class Split { kTrain, kVal, kTest };

inline constexpr std::string_view kNoColorizer = "none";
inline constexpr int kColorizedPerNatural = 3;

std::string_view to_string(Label label);
std::string_view to_string(Split split);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);

struct SampleRecord {
  std::filesystem::path image_path;
  Label label = Label::kNatural;
  std::string colorizer_id{kNoColorizer};
  std::string group_id;
  Split split = Split::kTrain;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetManifest {
  std::string name;
  std::uint64_t seed = 0;
  // External test corpora (and colorizer subsets) need not follow 1:3.
  bool ratio_free = false;
  std::vector<SampleRecord> records;

  std::size_t count(Label label) const;
  std::size_t group_count() const;
  // natural / colorized; empty when there are no colorized records.
  std::optional<double> ratio() const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Natural-to-colorized ratio from raw counts; nullopt when colorized == 0.
std::optional<double> natural_to_colorized_ratio(std::size_t natural, std::size_t colorized);

// Throws ProtocolViolation describing the first broken invariant:
// label/colorizer consistency, split consistency within a group, and (unless
// ratio_free) one natural plus three distinct colorizers per group.
void validate(const DatasetManifest& manifest);

struct BuildOptions {
  bool ratio_free = false;
  Split split = Split::kTrain;
};

// Pairs every natural image with the derivative of the same filename stem in
// each colorizer directory. Groups are emitted in stem order.
DatasetManifest build_manifest(const std::filesystem::path& natural_dir,
                               const std::map<std::string, std::filesystem::path>& colorized_dirs,
                               const std::string& name, std::uint64_t seed,
                               const BuildOptions& options = {});

// Splits at group granularity. First output is tagged TRAIN, second VAL.
std::pair<DatasetManifest, DatasetManifest> split_manifest(const DatasetManifest& manifest,
                                                           double train_fraction,
                                                           std::uint64_t seed);

// Keeps every natural record and only the colorized records whose
// colorizer_id is in keep. The result is ratio_free.
DatasetManifest select_colorizers(const DatasetManifest& manifest,
                                  const std::vector<std::string>& keep, const std::string& name);

// Returns a copy with every record moved to the given split.
DatasetManifest with_split(DatasetManifest manifest, Split split);

// JSON-lines serialization. Paths under base_dir are written relative to it;
// relative paths are resolved against base_dir when reading.
void write_manifest(std::ostream& out, const DatasetManifest& manifest,
                    const std::filesystem::path& base_dir = {});
DatasetManifest read_manifest(std::istream& in, const std::filesystem::path& base_dir = {});

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace colorguard

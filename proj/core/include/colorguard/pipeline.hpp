// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <opencv2/core.hpp>

#include "colorguard/manifest.hpp"
#include "colorguard/preprocess.hpp"

namespace colorguard {

class EpochStream;

struct PipelineOptions {
  bool shuffle = true;
};

// Turns a manifest into seed-deterministic batches: decode -> resize ->
// normalize, with optional caching of resized images and background
// prefetch. Cache and prefetch settings never change the emitted bytes.
//
// Copies share the decode cache; a copy with the same seed yields the same
// stream.
class Pipeline {
 public:
  Pipeline(DatasetManifest manifest, PreprocessConfig cfg, int batch_size,
           PipelineOptions options = {});

  const DatasetManifest& manifest() const { return *manifest_; }
  const PreprocessConfig& config() const { return cfg_; }
  int batch_size() const { return batch_size_; }
  std::size_t record_count() const { return manifest_->records.size(); }
  std::size_t batch_count() const;

  // Record visiting order for an epoch (a permutation of 0..n-1).
  std::vector<std::size_t> order(int epoch) const;

  // Starts producing the given epoch. The stream must not outlive the pipeline.
  EpochStream epoch(int epoch) const;

  // Decoded, resized 8-bit image for one record (cached when enabled).
  // Throws DecodeFailure naming the record's path.
  cv::Mat load_resized(std::size_t record_index) const;

  // Synchronously assembles the batch for the given records.
  Batch make_batch(const std::vector<std::size_t>& record_indices) const;

 private:
  struct Cache;

  std::shared_ptr<const DatasetManifest> manifest_;
  PreprocessConfig cfg_;
  int batch_size_;
  PipelineOptions options_;
  std::shared_ptr<Cache> cache_;
};

// Single-consumer stream of batches for one epoch.
class EpochStream {
 public:
  EpochStream(EpochStream&&) noexcept;
  EpochStream& operator=(EpochStream&&) noexcept;
  ~EpochStream();

  // Next batch, or nullopt at the end of the epoch. Rethrows decode errors.
  std::optional<Batch> next();

 private:
  friend class Pipeline;
  struct State;
  explicit EpochStream(std::unique_ptr<State> state);
  std::unique_ptr<State> state_;
};

}  // namespace colorguard

// SPDX-License-Identifier: Apache-2.0

#include "colorguard/pipeline.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "colorguard/error.hpp"
#include "colorguard/image_io.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

struct Pipeline::Cache {
  std::mutex mu;
  std::unordered_map<std::size_t, cv::Mat> images;
};

Pipeline::Pipeline(DatasetManifest manifest, PreprocessConfig cfg, int batch_size,
                   PipelineOptions options)
    : manifest_(std::make_shared<const DatasetManifest>(std::move(manifest))),
      cfg_(std::move(cfg)),
      batch_size_(batch_size),
      options_(options),
      cache_(std::make_shared<Cache>()) {
  cfg_.validate();
  if (batch_size_ < 1) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
}

std::size_t Pipeline::batch_count() const {
  const auto n = record_count();
  const auto b = static_cast<std::size_t>(batch_size_);
  return (n + b - 1) / b;
}

std::vector<std::size_t> Pipeline::order(int epoch) const {
  const std::size_t n = record_count();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (!options_.shuffle || n < 2) return idx;

  Rng rng(mix_seed(cfg_.shuffle_seed, static_cast<std::uint64_t>(epoch)));
  if (n <= cfg_.shuffle_buffer) {
    rng.shuffle(std::span<std::size_t>(idx));
    return idx;
  }
  // Windowed shuffle: keep a buffer of shuffle_buffer pending records, emit a
  // random one and refill from the stream.
  std::vector<std::size_t> out;
  out.reserve(n);
  std::vector<std::size_t> buffer(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cfg_.shuffle_buffer));
  for (std::size_t next = cfg_.shuffle_buffer; next < n; ++next) {
    const auto pick = rng.below(buffer.size());
    out.push_back(buffer[pick]);
    buffer[pick] = idx[next];
  }
  rng.shuffle(std::span<std::size_t>(buffer));
  out.insert(out.end(), buffer.begin(), buffer.end());
  return out;
}

cv::Mat Pipeline::load_resized(std::size_t record_index) const {
  if (cfg_.cache_enabled) {
    std::lock_guard lock(cache_->mu);
    auto it = cache_->images.find(record_index);
    if (it != cache_->images.end()) return it->second;
  }
  const SampleRecord& r = manifest_->records.at(record_index);
  cv::Mat img;
  try {
    img = resize(read_rgb(r.image_path), cfg_);
  } catch (const Error& e) {
    throw Error(ErrorCode::kDecodeFailure, r.image_path.string() + " (" + e.what() + ")");
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::kDecodeFailure, r.image_path.string() + " (" + e.what() + ")");
  }
  if (cfg_.cache_enabled) {
    std::lock_guard lock(cache_->mu);
    cache_->images.emplace(record_index, img);
  }
  return img;
}

Batch Pipeline::make_batch(const std::vector<std::size_t>& record_indices) const {
  Batch batch;
  batch.height = cfg_.target_height;
  batch.width = cfg_.target_width;
  batch.record_indices = record_indices;
  const std::size_t n = record_indices.size();
  batch.labels.resize(n);
  batch.pixels.resize(n * batch.image_stride());

  auto fill = [&](std::size_t i) {
    const cv::Mat norm = normalize(load_resized(record_indices[i]), cfg_);
    const auto* src = norm.ptr<float>();
    std::copy(src, src + batch.image_stride(), batch.pixels.data() + i * batch.image_stride());
    batch.labels[i] = static_cast<int>(manifest_->records[record_indices[i]].label);
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg_.decode_workers), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fill(i);
    return batch;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fill(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

struct EpochStream::State {
  const Pipeline* pipeline = nullptr;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;  // synchronous mode
  int batch_size = 1;

  // Prefetch mode.
  std::size_t depth = 0;
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Batch> ready;
  std::exception_ptr error;
  bool done = false;
  bool stop = false;
  std::thread worker;

  std::vector<std::size_t> slice(std::size_t start) const {
    const auto end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    return {order.begin() + static_cast<std::ptrdiff_t>(start),
            order.begin() + static_cast<std::ptrdiff_t>(end)};
  }

  void produce() {
    try {
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        Batch b = pipeline->make_batch(slice(start));
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stop || ready.size() < depth; });
        if (stop) return;
        ready.push_back(std::move(b));
        cv.notify_all();
      }
    } catch (...) {
      std::lock_guard lock(mu);
      error = std::current_exception();
    }
    std::lock_guard lock(mu);
    done = true;
    cv.notify_all();
  }

  void shutdown() {
    if (!worker.joinable()) return;
    {
      std::lock_guard lock(mu);
      stop = true;
    }
    cv.notify_all();
    worker.join();
  }
};

EpochStream::EpochStream(std::unique_ptr<State> state) : state_(std::move(state)) {}
EpochStream::EpochStream(EpochStream&&) noexcept = default;

EpochStream& EpochStream::operator=(EpochStream&& other) noexcept {
  if (this != &other) {
    if (state_) state_->shutdown();
    state_ = std::move(other.state_);
  }
  return *this;
}

EpochStream::~EpochStream() {
  if (state_) state_->shutdown();
}

std::optional<Batch> EpochStream::next() {
  State& s = *state_;
  if (s.depth == 0) {
    if (s.cursor >= s.order.size()) return std::nullopt;
    auto idx = s.slice(s.cursor);
    s.cursor += idx.size();
    return s.pipeline->make_batch(idx);
  }
  std::unique_lock lock(s.mu);
  s.cv.wait(lock, [&] { return !s.ready.empty() || s.done; });
  if (!s.ready.empty()) {
    Batch b = std::move(s.ready.front());
    s.ready.pop_front();
    s.cv.notify_all();
    return b;
  }
  if (s.error) {
    auto e = s.error;
    s.error = nullptr;
    std::rethrow_exception(e);
  }
  return std::nullopt;
}

EpochStream Pipeline::epoch(int epoch) const {
  auto state = std::make_unique<EpochStream::State>();
  state->pipeline = this;
  state->order = order(epoch);
  state->batch_size = batch_size_;
  state->depth = static_cast<std::size_t>(cfg_.prefetch_depth);
  if (state->depth > 0) {
    state->worker = std::thread([s = state.get()] { s->produce(); });
  }
  return EpochStream(std::move(state));
}

}  // namespace colorguard

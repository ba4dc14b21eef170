// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace colorguard {

// Derives an independent stream seed from a base seed and a salt (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

// Seeded generator whose outputs are identical across standard libraries.
// std::uniform_*_distribution and std::shuffle are implementation-defined,
// so every draw here is built directly on the mt19937_64 bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();
  std::uint64_t below(std::uint64_t n);  // [0, n), n > 0

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace colorguard

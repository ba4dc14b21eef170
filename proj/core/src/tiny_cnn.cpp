// SPDX-License-Identifier: Apache-2.0

#include "colorguard/tiny_cnn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "colorguard/error.hpp"
#include "colorguard/hash.hpp"
#include "colorguard/rng.hpp"

namespace colorguard {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

constexpr int kKernel = 3;
constexpr int kStride = 2;
constexpr int kPad = 1;

int conv_out(int n) { return (n + 2 * kPad - kKernel) / kStride + 1; }

// Strided view of a (channels, height, width) tensor in memory.
struct Layout {
  std::size_t c;
  std::size_t y;
  std::size_t x;
};

void im2col(const float* in, Layout lay, int channels, int h, int w, int ho, int wo, float* cols) {
  const std::size_t p_count = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        float* row = cols + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * p_count;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * kStride - kPad + ky;
          float* dst = row + static_cast<std::size_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0f);
            continue;
          }
          const float* src = in + c * lay.c + iy * lay.y;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * kStride - kPad + kx;
            dst[ox] = (ix < 0 || ix >= w) ? 0.0f : src[ix * lay.x];
          }
        }
      }
    }
  }
}

// Adjoint of im2col for a CHW destination.
void col2im(const float* cols, int channels, int h, int w, int ho, int wo, float* out) {
  const std::size_t p_count = static_cast<std::size_t>(ho) * wo;
  std::fill(out, out + static_cast<std::size_t>(channels) * h * w, 0.0f);
  for (int c = 0; c < channels; ++c) {
    float* plane = out + static_cast<std::size_t>(c) * h * w;
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        const float* row = cols + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * p_count;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * kStride - kPad + ky;
          if (iy < 0 || iy >= h) continue;
          const float* src = row + static_cast<std::size_t>(oy) * wo;
          float* dst = plane + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * kStride - kPad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::array<int, TinyCnn::kBlocks> TinyCnn::channels_for(BackboneName name) {
  switch (name) {
    case BackboneName::kTinyCnn: return {8, 16, 32};
    case BackboneName::kTinyCnn2: return {8, 16, 48};
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(to_string(name)) + " is not a desk-scale backbone");
  }
}

TinyCnn::TinyCnn(BackboneName name, std::uint64_t init_seed)
    : name_(name), channels_(channels_for(name)) {
  Rng rng(init_seed);
  int in_c = 3;
  for (int b = 0; b < kBlocks; ++b) {
    const int out_c = channels_[b];
    const int fan_in = in_c * kKernel * kKernel;
    const double limit = std::sqrt(6.0 / fan_in);  // He-uniform for ReLU
    auto& w = weights_[b];
    w.name = "conv" + std::to_string(b) + ".weight";
    w.shape = {out_c, fan_in};
    w.value.resize(static_cast<std::size_t>(out_c) * fan_in);
    for (auto& v : w.value) v = static_cast<float>(rng.uniform(-limit, limit));
    auto& bias = biases_[b];
    bias.name = "conv" + std::to_string(b) + ".bias";
    bias.shape = {out_c};
    bias.value.assign(static_cast<std::size_t>(out_c), 0.0f);
    if (b == 0) {
      // Inputs live in [0,1]; start each first-layer unit at zero response to mid-gray.
      for (int c = 0; c < out_c; ++c) {
        double sum = 0.0;
        for (int i = 0; i < fan_in; ++i) sum += w.value[static_cast<std::size_t>(c) * fan_in + i];
        bias.value[c] = static_cast<float>(-0.5 * sum);
      }
    }
    in_c = out_c;
  }
}

FeatureShape TinyCnn::output_shape() const { return {1, 1, channels_.back(), false}; }

std::vector<Parameter*> TinyCnn::parameters() {
  std::vector<Parameter*> out;
  for (int b = 0; b < kBlocks; ++b) {
    out.push_back(&weights_[b]);
    out.push_back(&biases_[b]);
  }
  return out;
}

std::vector<const Parameter*> TinyCnn::parameters() const {
  std::vector<const Parameter*> out;
  for (int b = 0; b < kBlocks; ++b) {
    out.push_back(&weights_[b]);
    out.push_back(&biases_[b]);
  }
  return out;
}

std::string TinyCnn::fingerprint() const {
  Sha256 h;
  h.update(to_string(name_));
  for (const Parameter* p : parameters()) {
    h.update(p->name);
    h.update(std::span(reinterpret_cast<const unsigned char*>(p->value.data()),
                       p->value.size() * sizeof(float)));
  }
  return h.finish();
}

void TinyCnn::forward(const float* image, int height, int width, float* features, Tape* tape) const {
  Tape local;
  Tape& t = tape ? *tape : local;
  t.heights[0] = height;
  t.widths[0] = width;

  const float* in = image;
  Layout lay{1, static_cast<std::size_t>(width) * 3, 3};  // HWC input
  int in_c = 3;
  for (int b = 0; b < kBlocks; ++b) {
    const int h = t.heights[b];
    const int w = t.widths[b];
    const int ho = conv_out(h);
    const int wo = conv_out(w);
    t.heights[b + 1] = ho;
    t.widths[b + 1] = wo;
    const int k = in_c * 9;
    const int p = ho * wo;
    const int out_c = channels_[b];

    t.cols[b].resize(static_cast<std::size_t>(k) * p);
    im2col(in, lay, in_c, h, w, ho, wo, t.cols[b].data());
    t.act[b].resize(static_cast<std::size_t>(out_c) * p);

    MapMat out(t.act[b].data(), out_c, p);
    out.noalias() = ConstMapMat(weights_[b].value.data(), out_c, k) *
                    ConstMapMat(t.cols[b].data(), k, p);
    for (int c = 0; c < out_c; ++c) {
      const float bias = biases_[b].value[c];
      float* row = t.act[b].data() + static_cast<std::size_t>(c) * p;
      for (int i = 0; i < p; ++i) row[i] = std::max(row[i] + bias, 0.0f);
    }

    in = t.act[b].data();
    lay = Layout{static_cast<std::size_t>(p), static_cast<std::size_t>(wo), 1};  // CHW
    in_c = out_c;
  }

  const int last = kBlocks - 1;
  const int p = t.heights[kBlocks] * t.widths[kBlocks];
  for (int c = 0; c < channels_[last]; ++c) {
    const float* row = t.act[last].data() + static_cast<std::size_t>(c) * p;
    double sum = 0.0;
    for (int i = 0; i < p; ++i) sum += row[i];
    features[c] = static_cast<float>(sum / p);
  }
}

void TinyCnn::backward(const Tape& tape, const float* dfeatures,
                       std::vector<std::vector<float>>& grads) const {
  if (grads.size() != static_cast<std::size_t>(2 * kBlocks)) {
    throw Error(ErrorCode::kShapeMismatch, "gradient buffer count mismatch");
  }
  const int last = kBlocks - 1;
  int p = tape.heights[kBlocks] * tape.widths[kBlocks];

  // d(post-ReLU activation) of the last block from global average pooling.
  std::vector<float> dact(static_cast<std::size_t>(channels_[last]) * p);
  for (int c = 0; c < channels_[last]; ++c) {
    std::fill_n(dact.data() + static_cast<std::size_t>(c) * p, p, dfeatures[c] / static_cast<float>(p));
  }

  std::vector<float> dcols;
  for (int b = last; b >= 0; --b) {
    const int out_c = channels_[b];
    const int in_c = b == 0 ? 3 : channels_[b - 1];
    const int k = in_c * 9;
    p = tape.heights[b + 1] * tape.widths[b + 1];

    const float* act = tape.act[b].data();
    for (std::size_t i = 0; i < dact.size(); ++i) {
      if (act[i] <= 0.0f) dact[i] = 0.0f;
    }
    ConstMapMat dpre(dact.data(), out_c, p);
    auto& gw = grads[2 * b];
    auto& gb = grads[2 * b + 1];
    MapMat(gw.data(), out_c, k).noalias() += dpre * ConstMapMat(tape.cols[b].data(), k, p).transpose();
    // Scalar loop: Eigen's vectorized sum peels by pointer alignment, so its order varies between buffers.
    for (int c = 0; c < out_c; ++c) {
      const float* row = dact.data() + static_cast<std::size_t>(c) * p;
      float acc = 0.0f;
      for (int i = 0; i < p; ++i) acc += row[i];
      gb[c] += acc;
    }

    if (b == 0) break;
    dcols.resize(static_cast<std::size_t>(k) * p);
    MapMat(dcols.data(), k, p).noalias() =
        ConstMapMat(weights_[b].value.data(), out_c, k).transpose() * dpre;
    const int h = tape.heights[b];
    const int w = tape.widths[b];
    std::vector<float> next(static_cast<std::size_t>(in_c) * h * w);
    col2im(dcols.data(), in_c, h, w, tape.heights[b + 1], tape.widths[b + 1], next.data());
    dact = std::move(next);
  }
}

std::vector<float> TinyCnn::extract(const float* images, std::size_t n, int height, int width) const {
  const auto d = static_cast<std::size_t>(channels_.back());
  std::vector<float> out(n * d);
  const std::size_t stride = static_cast<std::size_t>(height) * width * 3;
  Tape scratch;
  for (std::size_t i = 0; i < n; ++i) {
    forward(images + i * stride, height, width, out.data() + i * d, &scratch);
  }
  return out;
}

}  // namespace colorguard

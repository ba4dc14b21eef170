// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "colorguard/colorize.hpp"
#include "colorguard/ensemble.hpp"
#include "colorguard/metrics.hpp"
#include "colorguard/preprocess.hpp"
#include "colorguard/rng.hpp"
#include "colorguard/synth.hpp"
#include "colorguard/tiny_cnn.hpp"

namespace colorguard {
namespace {

Batch noise_batch(std::size_t n, int side) {
  Rng rng(1);
  Batch b;
  b.height = side;
  b.width = side;
  b.pixels.resize(n * static_cast<std::size_t>(side) * side * 3);
  for (float& v : b.pixels) v = static_cast<float>(rng.uniform());
  for (std::size_t i = 0; i < n; ++i) {
    b.labels.push_back(static_cast<int>(i % 2));
    b.record_indices.push_back(i);
  }
  return b;
}

void BM_TinyCnnForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const TinyCnn net(BackboneName::kTinyCnn2, 3);
  const Batch b = noise_batch(1, side);
  std::vector<float> feat(48);
  TinyCnn::Tape tape;
  for (auto _ : state) {
    net.forward(b.image(0), side, side, feat.data(), &tape);
    benchmark::DoNotOptimize(feat.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TinyCnnForward)->Arg(64)->Arg(224)->Unit(benchmark::kMicrosecond);

// Forward plus backward through the trainable branch and head.
void BM_EnsembleTrainStep(benchmark::State& state) {
  EnsembleSpec spec;
  spec.input_shape = {224, 224, 3};
  EnsembleModel m = build_ensemble(spec);
  const Batch b = noise_batch(static_cast<std::size_t>(state.range(0)), 224);
  std::vector<std::vector<float>> grads;
  for (auto _ : state) benchmark::DoNotOptimize(m.loss(b, {}, &grads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnsembleTrainStep)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_ResizeNormalize(benchmark::State& state) {
  const cv::Mat img = generate_natural_image(5, {.width = 512, .height = 384});
  const PreprocessConfig cfg;
  for (auto _ : state) {
    cv::Mat out = normalize(resize(img, cfg), cfg);
    benchmark::DoNotOptimize(out.data);
  }
}
BENCHMARK(BM_ResizeNormalize)->Unit(benchmark::kMicrosecond);

void BM_PseudoColorize(benchmark::State& state) {
  const auto method = kAllColorizeMethods[static_cast<std::size_t>(state.range(0))];
  const cv::Mat img = generate_natural_image(5);
  for (auto _ : state) {
    cv::Mat out = pseudo_colorize(img, method, 9);
    benchmark::DoNotOptimize(out.data);
  }
  state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_PseudoColorize)->DenseRange(0, 2)->Unit(benchmark::kMicrosecond);

void BM_ConfusionAndHter(benchmark::State& state) {
  Rng rng(3);
  std::vector<int> truth(static_cast<std::size_t>(state.range(0))), pred(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<int>(rng.below(2));
    pred[i] = static_cast<int>(rng.below(2));
  }
  truth[0] = 0;
  truth[1] = 1;
  for (auto _ : state) {
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
    benchmark::DoNotOptimize(hter(cm));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConfusionAndHter)->Arg(12000);

}  // namespace
}  // namespace colorguard

BENCHMARK_MAIN();

// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "colorguard/checkpoint.hpp"
#include "colorguard/ensemble.hpp"
#include "colorguard/error.hpp"
#include "colorguard/evaluate.hpp"
#include "colorguard/image_io.hpp"
#include "colorguard/manifest.hpp"
#include "colorguard/metrics.hpp"
#include "colorguard/pipeline.hpp"
#include "colorguard/rng.hpp"
#include "colorguard/run_config.hpp"
#include "colorguard/synth.hpp"
#include "colorguard/train.hpp"
#include "commands.hpp"
#include "fixtures.hpp"

namespace colorguard {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared small training setup for the cheaper criteria.
struct SmallRun {
  DatasetManifest train_m;
  DatasetManifest val_m;
  PreprocessConfig pre;
  EnsembleSpec spec;
  TrainConfig tc;
};

SmallRun small_run(const fs::path& dir, int groups, int side, int epochs, std::uint64_t seed) {
  SynthOptions so;
  so.width = 48;
  so.height = 40;
  so.manifest_name = "small";
  const DatasetManifest full = generate_synthetic_corpus(groups, dir, seed, so);
  SmallRun r;
  std::tie(r.train_m, r.val_m) = split_manifest(full, 0.6, seed);
  r.pre.target_height = side;
  r.pre.target_width = side;
  r.pre.shuffle_seed = mix_seed(seed, 11);
  r.spec.input_shape = {side, side, 3};
  r.spec.init_seed = mix_seed(seed, 13);
  r.tc.epochs = epochs;
  r.tc.batch_size = 4;
  r.tc.learning_rate = 3e-3;
  r.tc.seed = mix_seed(seed, 17);
  return r;
}

// 1 ---------------------------------------------------------------------------
Verdict metric_oracle() {
  const auto t0 = Clock::now();
  ConfusionMatrix fixture;
  fixture.tp = 8;
  fixture.fn = 2;
  fixture.tn = 9;
  fixture.fp = 1;
  if (hter(fixture) != 0.15) return {false, "fixture hter " + fmt("%.17g", hter(fixture))};

  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(2));
      pred[i] = static_cast<int>(rng.below(2));
    }
    truth[0] = 0;
    truth[1] = 1;
    ConfusionMatrix cm;
    std::size_t pos = 0, neg = 0, pos_wrong = 0, neg_wrong = 0, right = 0;
    for (std::size_t i = 0; i < n; ++i) {
      cm.add(truth[i], pred[i]);
      (truth[i] == 1 ? pos : neg)++;
      if (truth[i] != pred[i]) (truth[i] == 1 ? pos_wrong : neg_wrong)++;
      right += truth[i] == pred[i];
    }
    const double want_hter = 0.5 * (static_cast<double>(neg_wrong) / neg + static_cast<double>(pos_wrong) / pos);
    const double want_acc = static_cast<double>(right) / n;
    if (std::abs(hter(cm) - want_hter) > 1e-12 || std::abs(accuracy(cm) - want_acc) > 1e-12) {
      return {false, "trial " + std::to_string(trial) + " disagrees with the per-sample tally"};
    }
    ++checked;
  }
  const double secs = seconds_since(t0);
  return {secs < 5.0, std::to_string(checked) + " fixtures, hter(8,2,9,1)=0.15, " + fmt("%.3f s", secs)};
}

// 2 ---------------------------------------------------------------------------
Verdict architecture_contract() {
  EnsembleModel m = build_ensemble(testing::tiny_spec(64, 3));
  const FeatureDims d = m.feature_dims();
  if (m.head_input_width() != d.frozen + d.trainable) return {false, "head width mismatch"};
  if (d.frozen != 32 || d.trainable != 48) return {false, "unexpected branch widths"};
  const Batch b = testing::random_batch(6, 64, 64, 9);
  const FeatureTap tap = m.feature_tap(b);
  const std::vector<float> head = m.head_input(b);
  const std::size_t width = m.head_input_width();
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < d.frozen; ++j) {
      if (head[i * width + j] != tap.frozen[i * d.frozen + j]) return {false, "frozen slice differs"};
    }
    for (std::size_t j = 0; j < d.trainable; ++j) {
      if (head[i * width + d.frozen + j] != tap.trainable[i * d.trainable + j]) {
        return {false, "trainable slice differs"};
      }
    }
  }
  double worst = 0.0;
  for (const Logits& l : m.logits(b)) {
    const auto p = softmax(l);
    worst = std::max(worst, std::abs(p[0] + p[1] - 1.0));
  }
  return {worst <= 1e-6, "width " + std::to_string(width) + " = 32 + 48, max |sum-1| " + fmt("%.1e", worst)};
}

// 3 ---------------------------------------------------------------------------
Verdict frozen_immutability(const fs::path& dir) {
  SmallRun r = small_run(dir, 10, 32, 5, 31);
  EnsembleModel m = build_ensemble(r.spec);
  const std::string frozen0 = m.group_checksum(ParamGroup::kFrozen);
  const std::string trainable0 = m.group_checksum(ParamGroup::kTrainable);
  const Pipeline tp(r.train_m, r.pre, r.tc.batch_size);
  const Pipeline vp(r.val_m, r.pre, r.tc.batch_size, {false});
  const TrainResult res = train(m, tp, vp, r.tc);
  const bool same = m.group_checksum(ParamGroup::kFrozen) == frozen0;
  const bool moved = m.group_checksum(ParamGroup::kTrainable) != trainable0;
  return {same && moved && res.records.size() == 5,
          std::string("5 epochs, frozen ") + (same ? "unchanged" : "CHANGED") + ", trainable " +
              (moved ? "updated" : "not updated")};
}

// 4 ---------------------------------------------------------------------------
Verdict gradient_check() {
  EnsembleModel m = build_ensemble(testing::tiny_spec(32, 3));
  const Batch b = testing::random_batch(4, 32, 32, 11);
  std::vector<std::vector<float>> grads;
  m.loss(b, {}, &grads);
  auto params = m.optimized_parameters();
  Parameter* w = params[params.size() - 2];
  const std::vector<float>& g = grads[grads.size() - 2];
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::size_t i = 0; i < w->value.size(); ++i) {
    const float orig = w->value[i];
    const float h = 1e-2f;
    w->value[i] = orig + h;
    const double lp = m.loss(b, {});
    w->value[i] = orig - h;
    const double lm = m.loss(b, {});
    w->value[i] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    if (std::abs(numeric) < 1e-7 && std::abs(g[i]) < 1e-7) continue;
    worst = std::max(worst, std::abs(numeric - g[i]) / std::max({std::abs(numeric), std::abs(double{g[i]}), 1e-8}));
    ++compared;
  }
  return {w->name == "head.weight" && compared > 0 && worst <= 1e-3,
          std::to_string(compared) + " head weights, max rel err " + fmt("%.2e", worst)};
}

// 5 ---------------------------------------------------------------------------
Verdict separability(const fs::path& dir, fs::path& checkpoint_out) {
  const auto t0 = Clock::now();
  const DatasetManifest full = generate_synthetic_corpus(200, dir / "corpus", 7);
  SynthOptions held_opts;
  held_opts.manifest_name = "heldout";
  held_opts.split = Split::kTest;
  const DatasetManifest held = generate_synthetic_corpus(50, dir / "heldout", 99, held_opts);

  const nlohmann::json cfg_json = {
      {"schema", 1},
      {"seed", 7},
      {"model_id", "tiny"},
      {"output_dir", "run"},
      {"train_manifest", "corpus/manifest.jsonl"},
      {"train_fraction", 0.8},
      {"preprocess", {{"target_height", 224}, {"target_width", 224}}},
      {"model", {{"frozen_branch", {{"name", "TINY_CNN"}}}, {"trainable_branch", {{"name", "TINY_CNN2"}}}}},
      {"train", {{"epochs", 10}, {"batch_size", 16}, {"learning_rate", 0.003}}},
  };
  const RunConfig cfg = parse_run_config(cfg_json, dir);
  const auto [train_m, val_m] = split_manifest(full, cfg.train_fraction, cfg.seed);
  EnsembleModel model = build_ensemble(cfg.model);
  const Pipeline tp(train_m, cfg.preprocess, cfg.train.batch_size);
  const Pipeline vp(val_m, cfg.preprocess, cfg.train.batch_size, {false});
  const TrainResult res = train(model, tp, vp, cfg.train);

  EvaluateOptions eo;
  eo.model_id = cfg.model_id;
  eo.training_family = manifest_family(train_m.name);
  const auto reports = evaluate(model, {held}, cfg.preprocess, eo);
  const double held_hter = reports.at(0).hter;

  checkpoint_out = cfg.output_dir / "checkpoint";
  save_checkpoint(model, res.records, cfg.train, cfg.preprocess, {cfg.model_id, train_m.name, cfg.seed},
                  checkpoint_out);
  const double secs = seconds_since(t0);
  const bool pass = res.records.size() <= 10 && res.best_val_accuracy >= 0.95 && held_hter <= 0.08 && secs < 300.0;
  return {pass, std::to_string(full.records.size()) + " images, " + std::to_string(res.records.size()) +
                    " epochs, val acc " + fmt("%.4f", res.best_val_accuracy) + ", held-out HTER " +
                    fmt("%.4f", held_hter) + ", " + fmt("%.1f s", secs)};
}

Verdict predict_natural(const fs::path& dir, const fs::path& checkpoint) {
  if (checkpoint.empty()) return {false, "no acceptance checkpoint"};
  const fs::path image = dir / "fixture_natural.png";
  write_rgb(image, generate_natural_image(123456));
  std::ostringstream out, err;
  const int code = cli::run({"colorguard", "predict", "--checkpoint", checkpoint.string(), "--image", image.string(),
                             "--json"},
                            out, err);
  if (code != 0) return {false, "exit " + std::to_string(code) + ": " + err.str()};
  const auto row = nlohmann::json::parse(out.str()).at(0);
  const double p = row.at("p_natural").get<double>();
  return {row.at("label") == "natural" && p > 0.5, "p_natural " + fmt("%.4f", p)};
}

// 6 ---------------------------------------------------------------------------
Verdict generalization_protocol(const fs::path& dir) {
  const std::string a = "PALETTE_QUANT", b = "CHROMA_BLUR", c = "HUE_REMAP";
  SynthOptions so;
  const DatasetManifest corpus = generate_synthetic_corpus(120, dir / "ab", 21, so);
  const DatasetManifest ab = select_colorizers(corpus, {a, b}, "dsab");
  so.split = Split::kTest;
  const DatasetManifest other = generate_synthetic_corpus(30, dir / "c", 22, so);
  const DatasetManifest ext = select_colorizers(other, {c}, "dsc");
  for (const auto& rec : ab.records) {
    if (rec.colorizer_id == c) return {false, "C leaked into the training set"};
  }
  const auto [train_m, val_m] = split_manifest(ab, 0.8, 21);

  PreprocessConfig pre;
  EnsembleSpec spec;
  spec.init_seed = 5;
  TrainConfig tc;
  tc.epochs = 10;
  tc.batch_size = 8;
  tc.learning_rate = 3e-3;
  tc.seed = 21;
  EnsembleModel model = build_ensemble(spec);
  train(model, Pipeline(train_m, pre, tc.batch_size), Pipeline(val_m, pre, tc.batch_size, {false}), tc);

  EvaluateOptions eo;
  eo.model_id = "ab";
  eo.training_family = manifest_family(train_m.name);
  const auto reports = evaluate(model, {val_m, ext}, pre, eo);
  if (reports.size() != 2 || reports[0].cross_dataset || !reports[1].cross_dataset) {
    return {false, "expected one internal and one external row"};
  }
  if (reports[0].hter_difference || !reports[1].hter_difference ||
      *reports[1].hter_difference != reports[1].hter - reports[0].hter) {
    return {false, "difference is not external - internal"};
  }
  const std::string table = render_report_table(reports);
  if (table.find("dsab.val") == std::string::npos || table.find("dsc") == std::string::npos ||
      table.find("HTER difference") == std::string::npos) {
    return {false, "table lacks internal/external rows"};
  }

  // Reference pair: internal 0.89, external 4.7.
  std::vector<EvalReport> pair(2);
  pair[0].dataset_name = "internal";
  pair[0].hter = 0.89;
  pair[1].dataset_name = "external";
  pair[1].hter = 4.7;
  pair[1].cross_dataset = true;
  attach_hter_differences(pair);
  const double fixture = pair[1].hter_difference.value_or(NAN);
  const bool fixture_ok = std::abs(fixture - 3.81) < 1e-9 && render_report_table(pair).find("+3.810") != std::string::npos;
  return {fixture_ok, "internal " + fmt("%.4f", reports[0].hter) + ", external " + fmt("%.4f", reports[1].hter) +
                          ", difference " + fmt("%+.4f", *reports[1].hter_difference) + ", fixture " +
                          fmt("%+.2f", fixture)};
}

// 7 ---------------------------------------------------------------------------
bool one_to_three(const DatasetManifest& m) { return m.count(Label::kColorized) == 3 * m.count(Label::kNatural); }

Verdict protocol_fidelity(const fs::path& dir) {
  SynthOptions so;
  so.width = 40;
  so.height = 32;
  const DatasetManifest synth = generate_synthetic_corpus(60, dir / "corpus", 41, so);
  const DatasetManifest built =
      build_manifest(dir / "corpus" / "natural",
                     {{"A", dir / "corpus" / "PALETTE_QUANT"},
                      {"B", dir / "corpus" / "CHROMA_BLUR"},
                      {"C", dir / "corpus" / "HUE_REMAP"}},
                     "built", 41);
  std::size_t manifests = 0;
  for (const auto* m : {&synth, &built}) {
    if (!one_to_three(*m)) return {false, m->name + " breaks 1:3"};
    ++manifests;
  }

  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const double frac = rng.uniform(0.1, 0.9);
    const auto [tr, va] = split_manifest(trial % 2 ? synth : built, frac, rng.next());
    manifests += 2;
    if (!one_to_three(tr) || !one_to_three(va)) return {false, "split breaks 1:3"};
    std::map<std::string, int> side;
    for (const auto& r : tr.records) side[r.group_id] |= 1;
    for (const auto& r : va.records) side[r.group_id] |= 2;
    for (const auto& [g, s] : side) {
      if (s == 3) return {false, "group " + g + " spans both splits"};
    }
  }

  PreprocessConfig pre;
  pre.target_height = 24;
  pre.target_width = 24;
  const Pipeline pipe(synth, pre, 7);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::vector<int> seen(synth.records.size(), 0);
    std::size_t natural = 0, colorized = 0;
    auto stream = pipe.epoch(epoch);
    while (auto batch = stream.next()) {
      for (std::size_t i = 0; i < batch->size(); ++i) {
        const std::size_t idx = batch->record_indices[i];
        ++seen[idx];
        if (batch->labels[i] != static_cast<int>(synth.records[idx].label)) return {false, "label mismatch"};
        (batch->labels[i] == 0 ? natural : colorized)++;
      }
    }
    for (int s : seen) {
      if (s != 1) return {false, "epoch does not visit each record once"};
    }
    if (natural != synth.count(Label::kNatural) || colorized != synth.count(Label::kColorized)) {
      return {false, "epoch label multiset differs"};
    }
  }
  return {true, std::to_string(manifests) + " manifests at 1:3, 100 splits group-intact, 3 epochs match"};
}

// 8 ---------------------------------------------------------------------------
struct RunTrace {
  std::string manifest_text;
  std::vector<std::vector<std::size_t>> orders;
  std::vector<TrainRecord> records;
  std::vector<Logits> logits;
};

RunTrace traced_run(const fs::path& dir) {
  SmallRun r = small_run(dir / "data", 12, 32, 3, 55);
  RunTrace t;
  std::ostringstream text;
  write_manifest(text, r.train_m, dir / "data");
  write_manifest(text, r.val_m, dir / "data");
  t.manifest_text = text.str();

  EnsembleModel m = build_ensemble(r.spec);
  const Pipeline tp(r.train_m, r.pre, r.tc.batch_size);
  const Pipeline vp(r.val_m, r.pre, r.tc.batch_size, {false});
  TrainCallbacks cb;
  std::vector<std::size_t> current;
  cb.on_batch = [&](const Batch& b) { current.insert(current.end(), b.record_indices.begin(), b.record_indices.end()); };
  cb.on_epoch_end = [&](const TrainRecord&, const EnsembleModel&) { t.orders.push_back(std::exchange(current, {})); };
  const TrainResult res = train(m, tp, vp, r.tc, cb);
  t.records = res.records;

  save_checkpoint(m, res.records, r.tc, r.pre, {"det", r.train_m.name, 55}, dir / "ck");
  const LoadedCheckpoint loaded = load_checkpoint(dir / "ck");
  t.logits = loaded.model.logits(vp.make_batch({0, 1, 2, 3, 4, 5}));
  return t;
}

Verdict determinism(const fs::path& dir) {
  const RunTrace a = traced_run(dir / "a");
  const RunTrace b = traced_run(dir / "b");
  if (a.manifest_text != b.manifest_text) return {false, "manifests differ"};
  if (a.orders != b.orders) return {false, "batch orders differ"};
  if (a.records.size() != b.records.size()) return {false, "record counts differ"};
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    if (!a.records[i].same_metrics(b.records[i])) return {false, "TrainRecord " + std::to_string(i + 1) + " differs"};
  }
  if (a.logits != b.logits) return {false, "checkpoint forward outputs differ"};
  return {true, "manifests, " + std::to_string(a.orders.size()) + " epoch orders, records and " +
                    std::to_string(a.logits.size()) + " logits bit-identical"};
}

}  // namespace
}  // namespace colorguard

int main() {
  using namespace colorguard;
  testing::TempDir root("acceptance");
  fs::path checkpoint;

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 metric oracle equivalence", [] { return metric_oracle(); }},
      {"2 architecture contract", [] { return architecture_contract(); }},
      {"3 frozen immutability", [&] { return frozen_immutability(root / "c3"); }},
      {"4 head gradient check", [] { return gradient_check(); }},
      {"5 desk-scale separability", [&] { return separability(root / "c5", checkpoint); }},
      {"6 generalization protocol", [&] { return generalization_protocol(root / "c6"); }},
      {"7 protocol fidelity", [&] { return protocol_fidelity(root / "c7"); }},
      {"8 determinism", [&] { return determinism(root / "c8"); }},
      {"example: predict on a natural fixture", [&] { return predict_natural(root / "c5", checkpoint); }},
  };

  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << name << "  (" << v.detail << ")" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed") << std::endl;
  return failed == 0 ? 0 : 1;
}

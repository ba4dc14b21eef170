// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "colorguard/checkpoint.hpp"
#include "colorguard/error.hpp"
#include "colorguard/evaluate.hpp"
#include "colorguard/image_io.hpp"
#include "colorguard/manifest.hpp"
#include "colorguard/pipeline.hpp"
#include "colorguard/run_config.hpp"
#include "colorguard/synth.hpp"
#include "colorguard/train.hpp"

namespace colorguard::cli {

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  int groups = 0;
  std::string out;
  std::uint64_t seed = 0;
  std::string name = "synthetic";
  std::string split = "train";
};

struct BuildArgs {
  std::string natural;
  std::vector<std::string> colorized;
  std::string name;
  std::uint64_t seed = 0;
  bool ratio_free = false;
  std::string split = "train";
  std::string out;
};

struct TrainArgs {
  std::string config;
  bool quiet = false;
};

struct EvalArgs {
  std::string checkpoint;
  std::vector<std::string> manifests;
  std::string out = ".";
  bool json = false;
  int batch_size = 32;
};

struct PredictArgs {
  std::string checkpoint;
  std::vector<std::string> images;
  bool json = false;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIoFailure, "short write on " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::kIoFailure, "cannot create directory " + dir.string() + ": " + ec.message());
  }
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SynthOptions opts;
  opts.manifest_name = a.name;
  opts.split = parse_split(a.split);
  const DatasetManifest m = generate_synthetic_corpus(a.groups, a.out, a.seed, opts);
  out << "wrote " << m.records.size() << " images, manifest " << (fs::path(a.out) / "manifest.jsonl").string()
      << '\n';
  return kExitOk;
}

int cmd_build(const BuildArgs& a, std::ostream& out) {
  std::map<std::string, fs::path> dirs;
  for (const std::string& spec : a.colorized) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw Error(ErrorCode::kInvalidArgument, "--colorized expects ID=DIR, got '" + spec + "'");
    }
    const std::string id = spec.substr(0, eq);
    if (!dirs.emplace(id, spec.substr(eq + 1)).second) {
      throw Error(ErrorCode::kInvalidArgument, "colorizer id '" + id + "' given twice");
    }
  }
  BuildOptions opts;
  opts.ratio_free = a.ratio_free;
  opts.split = parse_split(a.split);
  const DatasetManifest m = build_manifest(a.natural, dirs, a.name, a.seed, opts);
  const fs::path path = a.out.empty() ? fs::path(a.name + ".jsonl") : fs::path(a.out);
  save_manifest(path, m);
  out << "wrote " << path.string() << ": " << m.count(Label::kNatural) << " natural, "
      << m.count(Label::kColorized) << " colorized, " << m.group_count() << " groups\n";
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const RunConfig cfg = load_run_config(a.config);
  ensure_dir(cfg.output_dir);

  DatasetManifest train_m = load_manifest(cfg.train_manifest);
  validate(train_m);
  DatasetManifest val_m;
  if (cfg.val_manifest) {
    val_m = with_split(load_manifest(*cfg.val_manifest), Split::kVal);
    validate(val_m);
  } else {
    std::tie(train_m, val_m) = split_manifest(train_m, cfg.train_fraction, cfg.seed);
  }
  const fs::path manifest_dir = cfg.output_dir / "manifests";
  save_manifest(manifest_dir / "train.jsonl", train_m);
  save_manifest(manifest_dir / "val.jsonl", val_m);
  write_text(cfg.output_dir / "run_config.json", to_json(cfg).dump(2) + "\n");

  BackboneLoadOptions load_opts;
  load_opts.input_height = cfg.preprocess.target_height;
  load_opts.input_width = cfg.preprocess.target_width;
  EnsembleModel model = build_ensemble(cfg.model, load_opts);

  const Pipeline train_pipe(train_m, cfg.preprocess, cfg.train.batch_size);
  const Pipeline val_pipe(val_m, cfg.preprocess, cfg.train.batch_size, PipelineOptions{.shuffle = false});

  const fs::path log_path = cfg.output_dir / "train_log.jsonl";
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw Error(ErrorCode::kIoFailure, "cannot write " + log_path.string());

  TrainCallbacks cb;
  cb.on_epoch_end = [&](const TrainRecord& r, const EnsembleModel&) {
    log << nlohmann::json(r).dump() << '\n' << std::flush;
    if (!a.quiet) {
      std::ostringstream line;
      line << "epoch " << r.epoch << "/" << cfg.train.epochs << std::fixed << std::setprecision(4) << "  loss "
           << r.train_loss << "  acc " << r.train_accuracy << "  val_loss " << r.val_loss << "  val_acc "
           << r.val_accuracy << std::setprecision(1) << "  (" << r.wall_time << "s)\n";
      out << line.str() << std::flush;
    }
  };
  const TrainResult result = train(model, train_pipe, val_pipe, cfg.train, cb);

  const fs::path ckpt = cfg.output_dir / "checkpoint";
  save_checkpoint(model, result.records, cfg.train, cfg.preprocess,
                  CheckpointInfo{cfg.model_id, train_m.name, cfg.seed}, ckpt);
  out << "best epoch " << result.best_epoch << " val_acc " << result.best_val_accuracy
      << (result.stopped_early ? " (stopped early)" : "") << "\ncheckpoint " << ckpt.string() << '\n';
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
  std::vector<DatasetManifest> manifests;
  for (const std::string& p : a.manifests) {
    manifests.push_back(load_manifest(p));
    validate(manifests.back());
  }
  EvaluateOptions opts;
  opts.model_id = ck.info.model_id;
  opts.training_family = manifest_family(ck.info.training_manifest);
  opts.batch_size = a.batch_size;
  std::vector<EvalReport> reports = evaluate(ck.model, manifests, ck.preprocess, opts);
  attach_hter_differences(reports);

  const nlohmann::json doc = reports;
  const std::string table = render_report_table(reports);
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_text(dir / "report.json", doc.dump(2) + "\n");
  write_text(dir / "report.txt", table);
  if (a.json) {
    out << doc.dump(2) << '\n';
  } else {
    out << table;
  }
  return kExitOk;
}

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
  nlohmann::json rows = nlohmann::json::array();
  bool failed = false;
  for (const std::string& path : a.images) {
    try {
      const cv::Mat img = normalize(resize(read_rgb(path), ck.preprocess), ck.preprocess);
      Batch b;
      b.height = img.rows;
      b.width = img.cols;
      b.labels = {0};
      b.record_indices = {0};
      const cv::Mat flat = img.isContinuous() ? img : img.clone();
      b.pixels.assign(flat.ptr<float>(), flat.ptr<float>() + b.image_stride());
      const Logits l = ck.model.logits(b).front();
      const auto p = softmax(l);
      const int cls = predict_class(l);
      const std::string label(to_string(static_cast<Label>(cls)));
      if (a.json) {
        rows.push_back({{"image", path}, {"label", label}, {"p_natural", p[0]}, {"p_colorized", p[1]}});
      } else {
        std::ostringstream line;
        line << path << '\t' << label << '\t' << std::fixed << std::setprecision(6) << p[cls] << '\n';
        out << line.str();
      }
    } catch (const Error& e) {
      failed = true;
      err << "error: " << path << ": " << e.what() << '\n';
      if (a.json) rows.push_back({{"image", path}, {"error", e.what()}});
    }
  }
  if (a.json) out << rows.dump(2) << '\n';
  return failed ? kExitRuntime : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect computer-colorized images with a two-branch CNN ensemble", "colorguard"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "colorguard 0.1.0");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic corpus: naturals plus three pseudo-colorized copies");
  s->add_option("--groups", synth.groups, "Number of natural images (each gets 3 colorized derivatives)")->required();
  s->add_option("--out", synth.out, "Output directory; receives natural/, <METHOD>/ and manifest.jsonl")->required();
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  s->add_option("--name", synth.name, "Manifest name")->capture_default_str();
  s->add_option("--split", synth.split, "Split tag for every record (train, val, test)")->capture_default_str();

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build a manifest from a natural directory and colorized directories");
  b->add_option("--natural", build.natural, "Directory of natural images")->required();
  b->add_option("--colorized", build.colorized, "Colorizer ID=DIR, repeat once per colorizer (three required)")
      ->required()
      ->take_all();
  b->add_option("--name", build.name, "Manifest name; the part before the first '.' is its family")->required();
  b->add_option("--seed", build.seed, "Seed recorded in the manifest header")->capture_default_str();
  b->add_flag("--ratio-free", build.ratio_free, "Allow any number of colorizers and missing derivatives");
  b->add_option("--split", build.split, "Split tag for every record (train, val, test)")->capture_default_str();
  b->add_option("--out", build.out, "Manifest path (default: <name>.jsonl)");

  TrainArgs trn;
  auto* t = app.add_subcommand("train", "Train an ensemble from a JSON run config");
  t->add_option("--config", trn.config, "Run config file (JSON, schema 1)")->required();
  t->add_flag("--quiet", trn.quiet, "Suppress per-epoch progress lines");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on one or more manifests");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint directory")->required();
  e->add_option("--manifest", ev.manifests, "Test manifest; repeat for external corpora")->required()->take_all();
  e->add_option("--out", ev.out, "Directory for report.json and report.txt")->capture_default_str();
  e->add_option("--batch-size", ev.batch_size, "Evaluation batch size")->capture_default_str()->check(
      CLI::PositiveNumber);
  e->add_flag("--json", ev.json, "Print the report as JSON instead of a table");

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Classify individual images as natural or colorized");
  p->add_option("--checkpoint", pr.checkpoint, "Checkpoint directory")->required();
  p->add_option("--image", pr.images, "Image file; repeat for several")->required()->take_all();
  p->add_flag("--json", pr.json, "Print results as JSON");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (b->parsed()) return cmd_build(build, out);
    if (t->parsed()) return cmd_train(trn, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (p->parsed()) return cmd_predict(pr, out, err);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return is_runtime_error(ex.code()) ? kExitRuntime : kExitValidation;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace colorguard::cli

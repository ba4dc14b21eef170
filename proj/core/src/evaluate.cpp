// SPDX-License-Identifier: Apache-2.0

#include "colorguard/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "colorguard/pipeline.hpp"

namespace colorguard {

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"dataset_name", r.dataset_name},
                     {"model_id", r.model_id},
                     {"accuracy", r.accuracy},
                     {"hter", r.hter},
                     {"cm", {{"tp", r.cm.tp}, {"tn", r.cm.tn}, {"fp", r.cm.fp}, {"fn", r.cm.fn},
                             {"positive_class", to_string(kPositiveClass)}}},
                     {"cross_dataset", r.cross_dataset}};
  j["hter_difference"] = r.hter_difference ? nlohmann::json(*r.hter_difference) : nlohmann::json(nullptr);
}

std::string manifest_family(std::string_view name) {
  return std::string(name.substr(0, name.find('.')));
}

double hter_difference(double internal_hter, double external_hter) { return external_hter - internal_hter; }

void attach_hter_differences(std::vector<EvalReport>& reports) {
  const auto internal = std::find_if(reports.begin(), reports.end(),
                                     [](const EvalReport& r) { return !r.cross_dataset; });
  for (auto& r : reports) {
    r.hter_difference.reset();
    if (internal != reports.end() && r.cross_dataset) r.hter_difference = hter_difference(internal->hter, r.hter);
  }
}

std::vector<EvalReport> evaluate(const Classifier& model, const std::vector<DatasetManifest>& manifests,
                                 const PreprocessConfig& cfg, const EvaluateOptions& options) {
  std::vector<EvalReport> reports;
  reports.reserve(manifests.size());
  for (std::size_t i = 0; i < manifests.size(); ++i) {
    const DatasetManifest& m = manifests[i];
    const Pipeline pipe(m, cfg, options.batch_size, PipelineOptions{false});
    EvalReport r;
    r.dataset_name = m.name;
    r.model_id = options.model_id;
    r.cm = confusion(model, pipe);
    r.accuracy = accuracy(r.cm);
    r.hter = hter(r.cm);
    r.cross_dataset = options.training_family.empty()
                          ? i > 0
                          : manifest_family(m.name) != options.training_family;
    reports.push_back(std::move(r));
  }
  attach_hter_differences(reports);
  return reports;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  const std::string model = reports.empty() || reports.front().model_id.empty() ? "model" : reports.front().model_id;
  const std::size_t first = std::max<std::size_t>(model.size(), 8) + 2;
  constexpr std::size_t kCol = 22;

  out << pad("Dataset", first);
  for (const auto& r : reports) out << "| " << pad(r.dataset_name + (r.cross_dataset ? " (ext)" : " (int)"), kCol);
  out << "\n" << pad("Metrics", first);
  for (std::size_t i = 0; i < reports.size(); ++i) out << "| " << pad("HTER    Accuracy", kCol);
  out << "\n" << std::string(first + reports.size() * (kCol + 2), '-') << "\n" << pad(model, first);
  for (const auto& r : reports) {
    out << "| " << pad(pad(fmt("%.3f", r.hter), 8) + fmt("%.2f%%", 100.0 * r.accuracy), kCol);
  }
  out << "\n\nConfusion matrices (positive class: " << to_string(kPositiveClass) << ")\n";
  for (const auto& r : reports) {
    out << "  " << r.dataset_name << ": TP=" << r.cm.tp << " FN=" << r.cm.fn << " FP=" << r.cm.fp
        << " TN=" << r.cm.tn << "\n";
  }
  bool header = false;
  for (const auto& r : reports) {
    if (!r.hter_difference) continue;
    if (!header) {
      out << "\nHTER difference (external - internal)\n";
      header = true;
    }
    out << "  " << r.dataset_name << ": " << fmt("%+.3f", *r.hter_difference) << "\n";
  }
  return out.str();
}

}  // namespace colorguard

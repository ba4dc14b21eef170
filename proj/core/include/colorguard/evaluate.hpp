// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "colorguard/classifier.hpp"
#include "colorguard/manifest.hpp"
#include "colorguard/metrics.hpp"
#include "colorguard/preprocess.hpp"

namespace colorguard {

struct EvalReport {
  std::string dataset_name;
  std::string model_id;
  double accuracy = 0.0;
  double hter = 0.0;
  ConfusionMatrix cm;
  bool cross_dataset = false;
  // external HTER - internal HTER, on cross-dataset rows when an internal
  // row exists.
  std::optional<double> hter_difference;
};

void to_json(nlohmann::json& j, const EvalReport& report);

struct EvaluateOptions {
  std::string model_id;
  // Family of the training manifest. Empty: the first manifest is taken as
  // the internal one and every other manifest as external.
  std::string training_family;
  int batch_size = 32;
};

// Manifest family: the name up to the first '.', so "ds1.train" and
// "ds1.test" share the family "ds1".
std::string manifest_family(std::string_view manifest_name);

// The generalization gap reported next to internal/external HTER pairs.
double hter_difference(double internal_hter, double external_hter);

// One report per manifest, in input order, computed from the argmax
// confusion matrix. Cross-dataset rows carry the HTER difference against
// the first internal row.
std::vector<EvalReport> evaluate(const Classifier& model, const std::vector<DatasetManifest>& manifests,
                                 const PreprocessConfig& cfg, const EvaluateOptions& options = {});

// Fills cross_dataset-based HTER differences in place.
void attach_hter_differences(std::vector<EvalReport>& reports);

// Aligned text table: one column group (HTER, Accuracy) per dataset, then the
// confusion matrices and internal/external differences.
std::string render_report_table(const std::vector<EvalReport>& reports);

}  // namespace colorguard

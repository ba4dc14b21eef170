// SPDX-License-Identifier: Apache-2.0

#include "colorguard/metrics.hpp"

#include "colorguard/error.hpp"

namespace colorguard {

void ConfusionMatrix::add(int truth, int predicted) {
  const int pos = static_cast<int>(kPositiveClass);
  if (truth == pos) {
    (predicted == pos ? tp : fn)++;
  } else {
    (predicted == pos ? fp : tn)++;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

double false_positive_rate(const ConfusionMatrix& cm) {
  if (cm.fp + cm.tn == 0) throw Error(ErrorCode::kUndefinedRate, "no negative (natural) samples");
  return static_cast<double>(cm.fp) / static_cast<double>(cm.fp + cm.tn);
}

double false_negative_rate(const ConfusionMatrix& cm) {
  if (cm.fn + cm.tp == 0) throw Error(ErrorCode::kUndefinedRate, "no positive (colorized) samples");
  return static_cast<double>(cm.fn) / static_cast<double>(cm.fn + cm.tp);
}

double hter(const ConfusionMatrix& cm) {
  false_positive_rate(cm);  // undefined-rate checks
  false_negative_rate(cm);
  // (fp/N + fn/P) / 2 as one rational, rounded once: exact integer products
  // up to 2^53, so e.g. tp=8 fn=2 tn=9 fp=1 gives exactly 0.15.
  const auto neg = static_cast<long double>(cm.fp + cm.tn);
  const auto pos = static_cast<long double>(cm.fn + cm.tp);
  const long double num = static_cast<long double>(cm.fp) * pos + static_cast<long double>(cm.fn) * neg;
  return static_cast<double>(num / (2.0L * neg * pos));
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyPipeline, "accuracy of an empty evaluation");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

ConfusionMatrix confusion(const Classifier& model, const Pipeline& pipe) {
  ConfusionMatrix cm;
  auto stream = pipe.epoch(0);
  while (auto batch = stream.next()) {
    const auto scores = model.logits(*batch);
    for (std::size_t i = 0; i < batch->size(); ++i) cm.add(batch->labels[i], predict_class(scores[i]));
  }
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyPipeline, "pipeline '" + pipe.manifest().name + "' is empty");
  return cm;
}

}  // namespace colorguard

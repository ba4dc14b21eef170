// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace colorguard {

enum class ErrorCode {
  kInvalidArgument,
  kProtocolViolation,
  kMissingDerivative,
  kDuplicateStem,
  kDegenerateSplit,
  kUnsupportedChannelCount,
  kIoFailure,
  kDecodeFailure,
  kWeightsUnavailable,
  kShapeMismatch,
  kIncompatibleBranches,
  kNanLoss,
  kEmptyPipeline,
  kSchemaVersionMismatch,
  kCorruptCheckpoint,
  kUndefinedRate,
};

std::string_view to_string(ErrorCode code);

// Errors that come from the environment (files, weights, corrupted state)
// rather than from bad arguments. The CLI maps these to exit code 3.
bool is_runtime_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace colorguard

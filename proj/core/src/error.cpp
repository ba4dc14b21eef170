// SPDX-License-Identifier: Apache-2.0

#include "colorguard/error.hpp"

namespace colorguard {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kMissingDerivative: return "MissingDerivative";
    case ErrorCode::kDuplicateStem: return "DuplicateStem";
    case ErrorCode::kDegenerateSplit: return "DegenerateSplit";
    case ErrorCode::kUnsupportedChannelCount: return "UnsupportedChannelCount";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kDecodeFailure: return "DecodeFailure";
    case ErrorCode::kWeightsUnavailable: return "WeightsUnavailable";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kIncompatibleBranches: return "IncompatibleBranches";
    case ErrorCode::kNanLoss: return "NanLoss";
    case ErrorCode::kEmptyPipeline: return "EmptyPipeline";
    case ErrorCode::kSchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::kCorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::kUndefinedRate: return "UndefinedRate";
  }
  return "Unknown";
}

bool is_runtime_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoFailure:
    case ErrorCode::kDecodeFailure:
    case ErrorCode::kWeightsUnavailable:
    case ErrorCode::kNanLoss:
    case ErrorCode::kSchemaVersionMismatch:
    case ErrorCode::kCorruptCheckpoint:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace colorguard

#include "monostereo/error.hpp"

namespace monostereo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kUnsupportedFormat: return "unsupported format";
    case ErrorCode::kCorruptHeader: return "corrupt header";
    case ErrorCode::kCorruptFile: return "corrupt file";
    case ErrorCode::kWriteFailed: return "write failed";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kImageTooSmall: return "image too small";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kStaleTape: return "stale tape";
    case ErrorCode::kWrongCheckpointKind: return "wrong checkpoint kind";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kInfeasibleScene: return "infeasible scene";
    case ErrorCode::kMissingCalibration: return "missing calibration";
    case ErrorCode::kEmptyInput: return "empty input";
  }
  return "unknown error";
}

}  // namespace monostereo

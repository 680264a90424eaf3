#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace monostereo {

enum class ErrorCode {
  kMissingFile,
  kUnsupportedFormat,
  kCorruptHeader,
  kCorruptFile,
  kWriteFailed,
  kDimensionMismatch,
  kInvalidArgument,
  kImageTooSmall,
  kShapeMismatch,
  kVersionMismatch,
  kStaleTape,
  kWrongCheckpointKind,
  kNonFinite,
  kInfeasibleScene,
  kMissingCalibration,
  kEmptyInput,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace monostereo

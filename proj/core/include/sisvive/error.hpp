#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sisvive {

// Broad failure class. The CLI maps these onto exit codes.
enum class ErrorKind {
  kInvalidArgument,  // caller violated a precondition
  kData,             // input data is malformed or unusable
  kNumerical,        // a numerical procedure could not proceed
};

// Fine-grained reason, so callers and tests can tell failures apart
// without parsing messages.
enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kUnknownColumn,
  kNonNumericCell,
  kMissingValue,
  kDuplicateRole,
  kMalformedCsv,
  kDimensionMismatch,
  kTooFewObservations,
  kRankDeficient,
  kZeroVarianceInstrument,
  kDegenerateExposure,
  kIrrelevantInstrument,
  kInconsistentValidSet,
  kBoundInapplicable,
  kTooManyInstruments,
  kPathLimitExceeded,
  kFoldTooSmall,
  kNotPositiveDefinite,
  kInfeasibleConfig,
};

std::string_view to_string(ErrorCode code) noexcept;
ErrorKind kind_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace sisvive

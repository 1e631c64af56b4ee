#include "sisvive/error.hpp"

namespace sisvive {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kUnknownColumn: return "unknown_column";
    case ErrorCode::kNonNumericCell: return "non_numeric_cell";
    case ErrorCode::kMissingValue: return "missing_value";
    case ErrorCode::kDuplicateRole: return "duplicate_role";
    case ErrorCode::kMalformedCsv: return "malformed_csv";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kTooFewObservations: return "too_few_observations";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kZeroVarianceInstrument: return "zero_variance_instrument";
    case ErrorCode::kDegenerateExposure: return "degenerate_exposure";
    case ErrorCode::kIrrelevantInstrument: return "irrelevant_instrument";
    case ErrorCode::kInconsistentValidSet: return "inconsistent_valid_set";
    case ErrorCode::kBoundInapplicable: return "bound_inapplicable";
    case ErrorCode::kTooManyInstruments: return "too_many_instruments";
    case ErrorCode::kPathLimitExceeded: return "path_limit_exceeded";
    case ErrorCode::kFoldTooSmall: return "fold_too_small";
    case ErrorCode::kNotPositiveDefinite: return "not_positive_definite";
    case ErrorCode::kInfeasibleConfig: return "infeasible_config";
  }
  return "unknown";
}

ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInfeasibleConfig:
      return ErrorKind::kInvalidArgument;
    case ErrorCode::kMissingFile:
    case ErrorCode::kUnknownColumn:
    case ErrorCode::kNonNumericCell:
    case ErrorCode::kMissingValue:
    case ErrorCode::kDuplicateRole:
    case ErrorCode::kMalformedCsv:
    case ErrorCode::kTooFewObservations:
    case ErrorCode::kZeroVarianceInstrument:
    case ErrorCode::kIrrelevantInstrument:
    case ErrorCode::kInconsistentValidSet:
    case ErrorCode::kTooManyInstruments:
    case ErrorCode::kFoldTooSmall:
      return ErrorKind::kData;
    case ErrorCode::kRankDeficient:
    case ErrorCode::kDegenerateExposure:
    case ErrorCode::kBoundInapplicable:
    case ErrorCode::kPathLimitExceeded:
    case ErrorCode::kNotPositiveDefinite:
      return ErrorKind::kNumerical;
  }
  return ErrorKind::kNumerical;
}

}  // namespace sisvive

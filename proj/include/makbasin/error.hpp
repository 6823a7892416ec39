#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace makbasin {

enum class ErrorCode {
  kInvalidParameter,
  kNonpositiveParameter,
  kDimensionMismatch,
  kNegativeConcentration,
  kNotAnEquilibrium,
  kSampleOnBoundary,
  kStepMisalignment,
  kStateEscapedDomain,
  kEmptySnapshotSet,
  kImaginaryResidualExceeded,
  kDegenerateSpectrum,
  kIndexOutOfRange,
  kNoFixedPointsFound,
  kMarginalSpectrum,
  kAllExcluded,
  kEmptyLevelSet,
  kSaddleNotOnCurve,
  kSideAssignmentConflict,
  kNoSaddle,
  kParse,
  kConfig,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kNonpositiveParameter: return "nonpositive-parameter";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNegativeConcentration: return "negative-concentration";
    case ErrorCode::kNotAnEquilibrium: return "not-an-equilibrium";
    case ErrorCode::kSampleOnBoundary: return "sample-on-boundary";
    case ErrorCode::kStepMisalignment: return "step-misalignment";
    case ErrorCode::kStateEscapedDomain: return "state-escaped-domain";
    case ErrorCode::kEmptySnapshotSet: return "empty-snapshot-set";
    case ErrorCode::kImaginaryResidualExceeded: return "imaginary-residual-exceeded";
    case ErrorCode::kDegenerateSpectrum: return "degenerate-spectrum";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kNoFixedPointsFound: return "no-fixed-points-found";
    case ErrorCode::kMarginalSpectrum: return "marginal-spectrum";
    case ErrorCode::kAllExcluded: return "all-excluded";
    case ErrorCode::kEmptyLevelSet: return "empty-level-set";
    case ErrorCode::kSaddleNotOnCurve: return "saddle-not-on-curve";
    case ErrorCode::kSideAssignmentConflict: return "side-assignment-conflict";
    case ErrorCode::kNoSaddle: return "no-saddle";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kConfig: return "config-error";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace makbasin

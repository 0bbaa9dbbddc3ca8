#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctevo {

enum class ErrorCode {
  AmbiguousBranch,
  NonPositiveDepth,
  DegenerateDisparity,
  ParseError,
  NonMonotonicTime,
  NoEventNearby,
  SingularNormalMatrix,
  SingularSystem,
  NoValidHypothesis,
  NonConvergence,
  NonPositiveDt,
  EmptyTrackletSet,
  OutOfWindow,
  EmptyReport,
  NoVisibleLandmarks,
  InvalidArgument,
  ConfigError,
  IoError,
  PipelineFailure,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AmbiguousBranch: return "AmbiguousBranch";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DegenerateDisparity: return "DegenerateDisparity";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::NoEventNearby: return "NoEventNearby";
    case ErrorCode::SingularNormalMatrix: return "SingularNormalMatrix";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NoValidHypothesis: return "NoValidHypothesis";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::EmptyTrackletSet: return "EmptyTrackletSet";
    case ErrorCode::OutOfWindow: return "OutOfWindow";
    case ErrorCode::EmptyReport: return "EmptyReport";
    case ErrorCode::NoVisibleLandmarks: return "NoVisibleLandmarks";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::PipelineFailure: return "PipelineFailure";
  }
  return "Unknown";
}

}  // namespace ctevo

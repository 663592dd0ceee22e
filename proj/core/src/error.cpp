#include "swarm/error.hpp"

namespace swarm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotHurwitz: return "NotHurwitz";
    case ErrorCode::kNotSchurStable: return "NotSchurStable";
    case ErrorCode::kSingularPencil: return "SingularPencil";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNonPositiveInput: return "NonPositiveInput";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kRegularizationExhausted: return "RegularizationExhausted";
    case ErrorCode::kLineSearchFailed: return "LineSearchFailed";
    case ErrorCode::kUnstable: return "Unstable";
    case ErrorCode::kRiccatiFailed: return "RiccatiFailed";
    case ErrorCode::kNoStabilizingF0: return "NoStabilizingF0";
    case ErrorCode::kPatternDestabilizes: return "PatternDestabilizes";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace swarm

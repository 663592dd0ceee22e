#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swarm {

enum class ErrorCode {
  kDimensionMismatch,
  kNotHurwitz,
  kNotSchurStable,
  kSingularPencil,
  kNonFinite,
  kNonPositiveInput,
  kNotPositiveDefinite,
  kRegularizationExhausted,
  kLineSearchFailed,
  kUnstable,
  kRiccatiFailed,
  kNoStabilizingF0,
  kPatternDestabilizes,
  kIoError,
  kConfigError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. All library failures use it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace swarm

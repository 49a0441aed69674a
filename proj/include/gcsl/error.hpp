#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcsl {

enum class ErrorCode {
  InvalidDimension,
  DimensionMismatch,
  NumericalFailure,
  NotPositiveDefinite,
  IllConditionedSpectra,
  DegeneratePair,
  DomainError,
  VacuousBound,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::NumericalFailure: return "numerical-failure";
    case ErrorCode::NotPositiveDefinite: return "not-positive-definite";
    case ErrorCode::IllConditionedSpectra: return "ill-conditioned-spectra";
    case ErrorCode::DegeneratePair: return "degenerate-pair";
    case ErrorCode::DomainError: return "domain-error";
    case ErrorCode::VacuousBound: return "vacuous-bound";
    case ErrorCode::ConfigError: return "config-error";
  }
  return "unknown";
}

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gcsl

#pragma once

#include <stdexcept>
#include <string>

namespace tracelab {

// Codes are mirrored one-to-one by tl_status in the C API.
enum class ErrorCode : int {
  InvalidArgument = 1,
  PreconditionViolation = 2,
  UnstableRank = 3,
  NotSymplectic = 4,
  EnergyDrift = 5,
  StepSizeCollapse = 6,
  NotPeriodic = 7,
  DependentGradients = 8,
  DegenerateDeterminant = 9,
  IncompleteSpectrum = 10,
  CountCapExceeded = 11,
  UnresolvedPhase = 12,
  ConfigError = 13,
  IoError = 14,
  VarianceBlowUp = 15,
  ConvergenceFailure = 16,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace tracelab

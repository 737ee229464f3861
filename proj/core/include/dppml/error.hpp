#pragma once

#include <stdexcept>
#include <string>

namespace dppml {

enum class ErrorCode {
  InvalidArgument,
  IndexOutOfRange,
  BadMagic,
  Truncated,
  CountMismatch,
  MalformedCsv,
  IoFailure,
  NotSymmetric,
  IndefiniteKernel,
  ZeroVector,
  TooLarge,
  DegenerateDistribution,
  ExhaustedMass,
  NotPositiveDefinite,
  MissingCovariances,
  DisconnectedGraph,
  NonPositiveEigenvalue,
  IsolatedPoint,
  NumericalFailure,
  MissingLabels,
  InvalidConfig,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as dppml::Error. `stage` is filled in by
// multi-step drivers (pipeline, experiments) so diagnostics say where a run died.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string stage = {})
      : std::runtime_error(stage.empty() ? what : "[" + stage + "] " + what),
        code_(code),
        stage_(std::move(stage)),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  Error with_stage(const std::string& stage) const { return Error(code_, detail_, stage); }

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace dppml

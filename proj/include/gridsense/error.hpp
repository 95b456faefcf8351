#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridsense {

enum class ErrorKind {
  // case ingestion
  MalformedSection,
  BadNumeric,
  MissingSection,
  NoSlackBus,
  MultipleSlackBuses,
  DanglingBranch,
  IslandedBus,
  SelfLoop,
  // numerics
  SingularJacobian,
  NotConverged,
  SingularReducedMatrix,
  SingularGain,
  ZeroReactanceBranch,
  OptimizerDiverged,
  NonFiniteStatistic,
  // orchestration
  Timeout,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind()` lets callers branch on the
/// failure class; the CLI maps it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gridsense

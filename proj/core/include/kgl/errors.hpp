#pragma once

#include <stdexcept>
#include <string>

namespace kgl {

// Process exit codes used by the command-line driver.  Library code throws;
// the driver maps exception categories onto these.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfigInvalid = 2,
  kExitSolverFailure = 3,
  kExitResourceCap = 4,
};

struct Error : std::runtime_error {
  Error(std::string kind, const std::string& what, int code)
      : std::runtime_error(what), kind(std::move(kind)), exit_code(code) {}
  std::string kind;
  int exit_code;
};

struct ConfigInvalid : Error {
  explicit ConfigInvalid(const std::string& w) : Error("ConfigInvalid", w, kExitConfigInvalid) {}
};
struct InvalidFrequency : Error {
  explicit InvalidFrequency(const std::string& w) : Error("InvalidFrequency", w, kExitConfigInvalid) {}
};
struct NonConvergence : Error {
  explicit NonConvergence(const std::string& w) : Error("NonConvergence", w, kExitSolverFailure) {}
};
struct SingularJacobian : Error {
  explicit SingularJacobian(const std::string& w) : Error("SingularJacobian", w, kExitSolverFailure) {}
};
struct EigenSolverFailure : Error {
  explicit EigenSolverFailure(const std::string& w) : Error("EigenSolverFailure", w, kExitSolverFailure) {}
};
struct MatchAmbiguity : Error {
  explicit MatchAmbiguity(const std::string& w) : Error("MatchAmbiguity", w, kExitSolverFailure) {}
};
struct DimensionOverflow : Error {
  explicit DimensionOverflow(const std::string& w) : Error("DimensionOverflow", w, kExitResourceCap) {}
};
struct DegreeOverflow : Error {
  explicit DegreeOverflow(const std::string& w) : Error("DegreeOverflow", w, kExitResourceCap) {}
};
struct OrderOverflow : Error {
  explicit OrderOverflow(const std::string& w) : Error("OrderOverflow", w, kExitResourceCap) {}
};

}  // namespace kgl

#pragma once

#include <stdexcept>
#include <string>

namespace raes {

// Invalid user-supplied parameters or configuration. The CLI maps this to
// exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A broken internal contract: reused node ids, edges to dead endpoints,
// churn events referencing unknown nodes, and the like. Always fatal.
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// The eigensolver ran out of budget before reaching the requested tolerance.
// Carries the best estimate seen so far and its residual bound.
class EigenSolveError : public std::runtime_error {
 public:
  EigenSolveError(const std::string& what, double best_estimate, double residual)
      : std::runtime_error(what), best_estimate(best_estimate), residual(residual) {}

  double best_estimate;
  double residual;
};

}  // namespace raes

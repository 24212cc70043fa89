#pragma once

#include <stdexcept>
#include <string>

namespace flpre {

// Exception hierarchy. The CLI maps each category onto a stable exit code.

/// Invalid argument or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-domain input data (bad CSV rows, y <= 0, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: singular systems, exp overflow, non-convergence.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}

  /// Newton iteration at which the failure happened, -1 when not applicable.
  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace flpre

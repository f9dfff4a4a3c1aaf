#pragma once

#include <stdexcept>
#include <string>

namespace dmh {

// Configuration file problem; carries the 1-based line number (0 = not line-specific).
struct ConfigError : std::runtime_error {
  int line = 0;
  ConfigError(int line_, const std::string& msg) : std::runtime_error(msg), line(line_) {}
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested schedule/method cannot be realized under the given time budget.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quadrature or solver failed to converge to the required tolerance.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Persisted policy-table file has an unknown or incompatible schema.
struct LutSchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid schedule-tree transition (insufficient ticks, non-positive blocklength, ...).
struct TransitionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace dmh

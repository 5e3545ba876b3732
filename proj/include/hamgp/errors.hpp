#pragma once

#include <stdexcept>
#include <string>

namespace hamgp {

// Invalid experiment configuration: bad dimensions, unbound slots,
// unsatisfiable requests. The message names the offending field or quantity.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid argument to a numerical routine (dimension mismatch, value out of
// range).
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure, e.g. a covariance that lost positive definiteness or a
// prior that underflowed. The message carries condition diagnostics.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A conditional SMC sweep whose weights all vanished. `step` is the time
// index at which normalization failed.
struct DegenerateSweepError : std::runtime_error {
  int step;
  explicit DegenerateSweepError(int t)
      : std::runtime_error("all particle weights vanished at step " +
                           std::to_string(t)),
        step(t) {}
};

}  // namespace hamgp

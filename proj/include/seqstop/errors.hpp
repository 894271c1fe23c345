#pragma once

#include <stdexcept>
#include <string>

namespace seqstop {

// Invalid argument to a library call (non-finite, out of domain, ...).
struct parameter_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Inconsistent or unusable configuration (zero variances, bad priors, ...).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data-dependent estimation failure (degenerate exploration sample); callers
// running replications may redraw on a fresh stream.
struct estimation_error : config_error {
  using config_error::config_error;
};

// Iterative solver failed to reach its tolerance.
struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Quadrature / PDE scheme lost accuracy or produced non-finite values.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace seqstop

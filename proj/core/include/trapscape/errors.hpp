#pragma once

#include <stdexcept>
#include <string>

namespace trapscape {

// Invalid argument or evaluation point outside a function's domain (e.g. y <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation requested on an object in the wrong state (wrong node topology,
// unconverged crystal, single-string crystal where two are needed, ...).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An iterative method failed to converge or hit a singular configuration.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Converged point is a saddle, not a minimum.
class SaddleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace trapscape

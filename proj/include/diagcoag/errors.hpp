#pragma once

#include <stdexcept>
#include <string>

namespace diagcoag {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters outside the admissible range (gamma >= 1, beta < beta_star, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called on an object that does not meet its precondition,
/// e.g. a bound check on a profile that was never normalized.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Iteration did not converge or left the admissible ball.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A target value is not attained inside the stored domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A theorem-backed invariant (positivity, monotone decrease) failed at `x`.
class InvariantViolation : public Error {
 public:
  InvariantViolation(const std::string& what, double x)
      : Error(what + " at x = " + std::to_string(x)), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

/// Time stepping gave up after the maximum number of step halvings.
class StepCollapse : public Error {
 public:
  using Error::Error;
};

}  // namespace diagcoag

#pragma once

#include <stdexcept>
#include <string>

namespace lcs {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad grid sizes, malformed config, parameters on the
/// critical set, paths through it. The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A function was called with arguments that violate its documented
/// precondition (e.g. a field that is not mean-zero).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A bubble concentration scale that the grid cannot resolve.
class ResolutionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Iterative method did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared in an energy or a field.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SingularJacobianError : public ConvergenceError {
 public:
  SingularJacobianError(const std::string& what, double condition_estimate)
      : ConvergenceError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Outer descent left the coercive regime: the density collapsed to grid
/// scale or the energy fell below the divergence floor.
class UnboundedDescentError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

class BranchLostError : public ConvergenceError {
 public:
  BranchLostError(const std::string& what, double last_rho1, double last_rho2)
      : ConvergenceError(what), last_rho1_(last_rho1), last_rho2_(last_rho2) {}
  double last_rho1() const noexcept { return last_rho1_; }
  double last_rho2() const noexcept { return last_rho2_; }

 private:
  double last_rho1_;
  double last_rho2_;
};

}  // namespace lcs

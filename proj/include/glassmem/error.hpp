#pragma once

#include <stdexcept>
#include <string>

namespace glassmem {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched dimensions between configurations, matrices or plans.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// An input violates a documented precondition (normalization, binary values, ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine was asked to evaluate outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The adaptive integrator could not reach the requested tolerance.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Bisection or fitting could not bracket / converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace glassmem

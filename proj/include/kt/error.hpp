#pragma once

#include <stdexcept>
#include <string>

namespace kt {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (bad CSV cell, NaN, dimension mismatch).
class DataError : public Error {
 public:
  using Error::Error;
};

// Parameter combination that violates a mathematical precondition.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

// The requested family/exponent pair has no closed-form power kernel.
class NoClosedFormPowerKernel : public ConstraintError {
 public:
  explicit NoClosedFormPowerKernel(const std::string& constraint)
      : ConstraintError("no closed-form power kernel: " + constraint),
        constraint_(constraint) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

// A swap-delta cache view was used after the cache it was taken from changed.
class StaleCache : public Error {
 public:
  using Error::Error;
};

}  // namespace kt

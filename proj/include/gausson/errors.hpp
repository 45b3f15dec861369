#pragma once

#include <stdexcept>
#include <string>

namespace gausson {

// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input parameters or configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A formula evaluated outside its domain of validity.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Requested time or position outside the data a routine was given.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Two series whose time stamps do not line up.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Failure of a numerical procedure (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InstabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BoundaryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnwrapError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Width ODE driven to (or below) the collapse floor.
class CollapseError : public NumericalError {
 public:
  CollapseError(const std::string& what, double time)
      : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace gausson

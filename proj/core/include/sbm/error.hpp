#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied arguments that violate a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Parameter estimation is undefined for the given input (e.g. an empty class).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration refused because the instance is too large.
class InstanceTooLarge : public Error {
 public:
  using Error::Error;
};

/// Iterative eigensolver did not reach the requested residual.
class SolverNotConverged : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbm

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ot {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched or out-of-contract grid shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad user-supplied values (negative densities, out-of-range parameters, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inputs that make the problem meaningless (all-zero density, all-obstacle mask).
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Boundary data that no feasible field can match (unequal masses).
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// Solver or algorithm configuration rejected before any iteration runs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Problem size outside what a code path is built for.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Unrecoverable numerical failure inside a kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An iterative estimate ran out of budget; carries the last value seen.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double last)
      : NumericalError(what), last_estimate(last) {}
  double last_estimate;
};

/// Malformed input file; offset is the byte position where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t at)
      : Error(what + " (byte " + std::to_string(at) + ")"), offset(at) {}
  std::size_t offset;
};

/// Filesystem-level failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ot

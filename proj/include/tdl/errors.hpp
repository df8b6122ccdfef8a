#pragma once

#include <stdexcept>
#include <string>

namespace tdl {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violates an operation's preconditions (dimension mismatch,
/// out-of-range value, malformed argument).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested protocol (single-label training
/// set, empty dataset, probe identity missing from the gallery).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite values where finite ones are required,
/// or an eigendecomposition that did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or file-format problem.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdl

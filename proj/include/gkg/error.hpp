#pragma once

#include <stdexcept>
#include <string>

namespace gkg {

/// Base class for every error raised by the library. Each subclass maps to a
/// distinct process exit code in the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad arguments, bad dimensions, ids out of range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Malformed input files, parse failures, version or hash mismatches.
class FormatError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

/// Non-finite values, failed factorizations, loss overflow.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

/// A sampler could not satisfy the requested query shape.
class UnsatisfiableQuery : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 6; }
};

}  // namespace gkg

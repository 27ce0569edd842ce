#pragma once

#include <stdexcept>
#include <string>

namespace ppm {

/// Base for every error raised by the library. `exit_code()` follows the CLI
/// convention: 2 for data problems, 3 for numeric failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

/// Malformed input: bad files, bad scene specs, mismatched shapes.
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// Non-finite values or a diverging computation.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace ppm

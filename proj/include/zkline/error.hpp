#pragma once

#include <stdexcept>
#include <string>

namespace zkline {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// A banded factorization met a pivot below the configured threshold.
class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace zkline

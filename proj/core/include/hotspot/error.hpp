#pragma once

#include <stdexcept>
#include <string>

namespace hotspot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or contradictory configuration / arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a contract (bad CSV, event outside grid, single class, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Optimizer divergence, non-finite values and similar numeric failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hotspot

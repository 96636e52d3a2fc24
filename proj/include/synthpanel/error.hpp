#pragma once

#include <stdexcept>
#include <string>

namespace synthpanel {

// Error categories map onto CLI exit codes: data problems exit 2, inference
// degeneracy exits 3, everything else exits 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Input value outside a supported range (timestamps, period windows).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Two records landed in the same (country, period) cell.
class AggregationError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InsufficientDonorsError : public Error {
 public:
  using Error::Error;
};

/// Inference cannot proceed (too few donors, every placebo excluded).
class DegenerateInferenceError : public Error {
 public:
  using Error::Error;
};

/// P(w >= q - v(x)) is numerically zero; nobody joins the platform.
class EmptyPlatformError : public Error {
 public:
  using Error::Error;
};

}  // namespace synthpanel

#pragma once

#include <stdexcept>
#include <string>

namespace cilab {

// Error taxonomy shared by all modules. The CLI maps each subtype to a
// distinct diagnostic prefix and exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: shape mismatches, non-finite entries, empty inputs.
class InputError : public Error {
 public:
  using Error::Error;
};

// A required learned artifact is missing or would be overwritten.
class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration (unknown key, out-of-range value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Threshold calibration cannot proceed (e.g. empty validation set).
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Iterative numerics failed (non-convergence, overflow).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A feature vector collapsed below the normalization floor.
class DegenerateFeatureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace cilab

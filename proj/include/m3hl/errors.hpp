#pragma once

#include <stdexcept>
#include <string>

namespace m3hl {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched array shapes, odd batch sizes, structurally different networks.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Image extent that is not a multiple of the mask patch or network stride.
class DivisibilityError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

/// Scalar argument outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeightError : public Error {
 public:
  using Error::Error;
};

/// Surface distance requested for an empty mask.
class UndefinedSurfaceError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace m3hl

#pragma once

#include <stdexcept>
#include <string>

namespace fsprior {

/// Base class for errors raised by the library. Contract violations on
/// arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or decoded.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input whose content cannot be used (empty mask, too few
/// images for a class, no usable patches, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Raised by the optimizer when a non-finite gradient shows up.
class DivergenceError : public Error {
 public:
  DivergenceError() : Error("divergence detected") {}
};

}  // namespace fsprior

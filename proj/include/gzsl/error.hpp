#pragma once

#include <stdexcept>
#include <string>

namespace gzsl {

/// Base of every error thrown by the library. The CLI maps the subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad shapes, out-of-range arguments, inconsistent datasets.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Floating-point trouble: NaN/Inf, singular systems, zero-norm vectors.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateVectorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gzsl

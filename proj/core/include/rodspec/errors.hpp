#pragma once

#include <stdexcept>
#include <string>

namespace rodspec {

// Two families: bad input (CLI exit code 2) and numerical failure (exit code 3).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotLieAlgebraElement : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfDomain : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IndexOutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LengthMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyDictionary : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularRotation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateTangent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMass : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroEnergy : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace rodspec

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace prodnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (I - A) is singular or its Neumann series diverges.
class InvertibilityError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data is inconsistent (zero supply with positive use, missing years, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A file or API payload does not match the expected schema.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

/// A parameter hits a singular point of a formula (xi = 1, rank-deficient Jacobian, ...).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// The moment Jacobian lacks full column rank; names the parameter.
class RankDeficiencyError : public SingularityError {
 public:
  RankDeficiencyError(const std::string& what, std::string parameter)
      : SingularityError(what), parameter_(std::move(parameter)) {}
  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

/// The equilibrium solver did not converge or produced inadmissible values.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_residual = 0.0)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace prodnet

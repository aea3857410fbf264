#pragma once

#include <stdexcept>
#include <string>

namespace hfsym {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands that do not belong together (mismatched algebras, degrees of
/// chains or cochains, complexes).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-provided configuration: shapes, offsets, conventions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Graded bookkeeping violation: a morphism or defect applied to a value of
/// the wrong degree, or two same-degree actions composed.
class DegreeError : public Error {
 public:
  using Error::Error;
};

/// Unsupported or ill-posed geometric configuration.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  /// Final residual (max-norm) reached before giving up.
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace hfsym

#pragma once

#include <stdexcept>
#include <string>

namespace nonlocal {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (lambda <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Query outside a tabulated range.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

// Operation not available for the given Bernstein variant.
class UnsupportedVariant : public Error {
 public:
  using Error::Error;
};

// A spec that fails its admissibility checks (scaling indices, drift, ...).
class RejectedSpec : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

// A numerical verification (refinement tolerance, Definition-type bounds,
// subsolution clauses, inversion residual) did not hold.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class StatisticalFailure : public Error {
 public:
  using Error::Error;
};

// Malformed configuration. `pointer` is a JSON pointer to the offending node.
class SchemaError : public Error {
 public:
  SchemaError(std::string pointer, const std::string& what)
      : Error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

}  // namespace nonlocal

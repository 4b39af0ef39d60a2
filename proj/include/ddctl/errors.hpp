// Error taxonomy shared by all ddctl modules.
#pragma once

#include <stdexcept>
#include <string>

namespace ddctl {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Matrix/vector shapes disagree with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar or option value is outside its admissible range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A structural precondition failed: rank deficiency, a non-neutrally-stable
/// signal generator, repeated eigenvalues where distinct ones are required, ...
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A computation lost too much accuracy to be trusted (residual or
/// conditioning beyond tolerance).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A block-diagram wiring problem: dangling port, width mismatch, or an
/// algebraic loop through feedthrough terms.
class WiringError : public Error {
 public:
  using Error::Error;
};

/// A scenario configuration violates the published schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddctl

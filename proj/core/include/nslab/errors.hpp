#pragma once

#include <stdexcept>
#include <string>

namespace nslab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A distribution or ensemble violates its construction invariants.
class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the documented domain of an operation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A single transfer factor has an entry beyond 1e100.
class FactorOverflow : public Error {
 public:
  using Error::Error;
};

/// The energy is a root of the window's characteristic polynomial, so the
/// Green's function does not exist there. Perturb the energy or use the
/// deviation-set scan instead.
class EnergyAtEigenvalue : public Error {
 public:
  using Error::Error;
};

/// Inverse iteration failed to reach the residual target.
class EigenvectorNonconvergence : public Error {
 public:
  using Error::Error;
};

/// Fewer usable sites than a fit needs.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// A reference growth table does not cover what an estimator needs.
class MissingReference : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; the message names the field or line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nslab

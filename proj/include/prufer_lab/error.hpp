#pragma once

#include <stdexcept>
#include <string>

namespace prufer_lab {

// Base for every error raised by the library. Callers that only care about
// "the computation could not be carried out" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument is outside the documented domain (non-positive step, e0 <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// (L + i kappa)^{-1} requested at kappa = 0.
class SingularResolventError : public Error {
 public:
  using Error::Error;
};

// The potential has no nonzero Fourier mode, so C(E) vanishes and beta(E) is undefined.
class DegeneratePotentialError : public Error {
 public:
  using Error::Error;
};

// Grid lengths of two inputs that must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Energy outside the positive bulk.
class OutOfScopeError : public Error {
 public:
  using Error::Error;
};

// theta_L(kappa) decreased between two scan points by more than the tolerance.
class BracketError : public Error {
 public:
  BracketError(const std::string& what, double kappa_lo, double kappa_hi)
      : Error(what), kappa_lo_(kappa_lo), kappa_hi_(kappa_hi) {}
  double kappa_lo() const noexcept { return kappa_lo_; }
  double kappa_hi() const noexcept { return kappa_hi_; }

 private:
  double kappa_lo_;
  double kappa_hi_;
};

// Root bracketing for the drift critical points failed (C_n^2 not large
// compared to the effective lambda).
class AsymptoticRegimeError : public Error {
 public:
  using Error::Error;
};

// Truncation doubling of an improper integral did not stabilise.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

// Empty or otherwise unusable statistical sample.
class SampleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace prufer_lab

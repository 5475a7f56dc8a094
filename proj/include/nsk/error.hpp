#pragma once

#include <stdexcept>
#include <string>

namespace nsk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, exponents, run configuration or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A density field that must be strictly positive is not.
class PositivityError : public Error {
 public:
  PositivityError(const std::string& where, double min_value)
      : Error(where + ": density must be strictly positive (min = " + std::to_string(min_value) + ")"),
        min_value_(min_value) {}

  double min_value() const noexcept { return min_value_; }

 private:
  double min_value_;
};

/// Operation requested outside the set of cases it is defined for
/// (derivative order, theta = 0 Bernis pair, regularized law in the theta form, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Time stepping produced a non-finite field.
class StabilityFailure : public Error {
 public:
  using Error::Error;
};

/// Time stepping drove the density to a nonpositive value in some RK stage.
class PositivityFailure : public Error {
 public:
  PositivityFailure(int stage, double min_rho)
      : Error("positivity lost in RK stage " + std::to_string(stage) + " (min rho = " + std::to_string(min_rho) + ")"),
        stage_(stage),
        min_rho_(min_rho) {}

  int stage() const noexcept { return stage_; }
  double min_rho() const noexcept { return min_rho_; }

 private:
  int stage_;
  double min_rho_;
};

}  // namespace nsk

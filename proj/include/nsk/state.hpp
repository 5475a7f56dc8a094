#pragma once

// Solver state, initial data description and the full run configuration.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nsk/coefficients.hpp"
#include "nsk/error.hpp"
#include "nsk/grid.hpp"

namespace nsk {

struct State {
  double t = 0.0;
  PeriodicField rho;
  PeriodicField u;
};

/// One Fourier component a cos(2 pi k x / L) + b sin(2 pi k x / L).
struct Mode {
  int k = 1;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

/// Either a constant plus a list of Fourier modes, or a named preset.
struct FieldSpec {
  double constant = 0.0;
  std::vector<Mode> modes;
  std::string preset;  // empty: use constant + modes

  static FieldSpec uniform(double c) { return FieldSpec{c, {}, {}}; }
  static FieldSpec sine(double mean, double amp, int k = 1) { return FieldSpec{mean, {Mode{k, 0.0, amp}}, {}}; }
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"reference_density", "reference_velocity", "near_vacuum", "bump"};
  return names;
}

inline PeriodicField realize(const FieldSpec& spec, const Grid& grid) {
  const double L = grid.length();
  const double w = 2.0 * std::numbers::pi / L;
  if (!spec.preset.empty()) {
    if (spec.preset == "reference_density") {
      return PeriodicField::from_function(grid, [&](double x) { return 2.0 + 0.5 * std::sin(w * x); });
    }
    if (spec.preset == "reference_velocity") {
      return PeriodicField::from_function(grid, [&](double x) { return 0.1 * std::sin(w * x); });
    }
    if (spec.preset == "near_vacuum") {
      return PeriodicField::from_function(grid, [&](double x) { return 1.0 + 0.95 * std::sin(w * x); });
    }
    if (spec.preset == "bump") {
      return PeriodicField::from_function(grid, [&](double x) {
        const double s = std::sin(0.5 * w * x);
        return 1.0 + std::exp(-20.0 * s * s) * 0.8;
      });
    }
    throw ConfigError("initial data: unknown preset '" + spec.preset + "'");
  }
  for (const auto& m : spec.modes) {
    if (m.k < 1) throw ConfigError("initial data: mode numbers must be >= 1 (got " + std::to_string(m.k) + ")");
    if (static_cast<std::size_t>(m.k) > grid.n() / 3) {
      throw ConfigError("initial data: mode " + std::to_string(m.k) + " is above the dealiasing cutoff n/3");
    }
  }
  return PeriodicField::from_function(grid, [&](double x) {
    double v = spec.constant;
    for (const auto& m : spec.modes) v += m.cos_amp * std::cos(m.k * w * x) + m.sin_amp * std::sin(m.k * w * x);
    return v;
  });
}

struct InitialDataSpec {
  FieldSpec rho0 = FieldSpec{0.0, {}, "reference_density"};
  FieldSpec u0 = FieldSpec{0.0, {}, "reference_velocity"};
  /// Required lower bound for the realized density.
  double floor = 1e-3;
};

struct GridConfig {
  std::size_t n = 256;
  double length = 1.0;
};

struct ExponentConfig {
  double alpha = 1.0;
  double beta = -1.0;
  double gamma = 2.0;
  double epsilon = 0.01;
};

struct IntegratorConfig {
  double cfl = 0.25;
  double t_end = 0.05;
  int sample_every = 10;
  /// Fixed step; 0 selects the adaptive stable_dt.
  double dt = 0.0;
  std::size_t max_steps = 10'000'000;
};

struct OutputConfig {
  std::string dir = "out";
  int precision = 17;
};

struct RunConfig {
  GridConfig grid;
  ExponentConfig exponents;
  InitialDataSpec initial;
  IntegratorConfig integrator;
  OutputConfig output;
  std::uint64_t seed = 0;

  ExponentParams params() const {
    return derive_exponents(exponents.alpha, exponents.beta, exponents.gamma, exponents.epsilon);
  }
  Grid make_grid() const { return Grid(grid.n, grid.length); }
};

/// Checks every constraint of a configuration; throws ConfigError naming the first violation.
inline void validate(const RunConfig& c) {
  (void)c.make_grid();
  (void)c.params();
  if (!(c.integrator.cfl > 0.0 && c.integrator.cfl <= 1.0)) throw ConfigError("integrator: requires 0 < cfl <= 1");
  if (!(c.integrator.t_end > 0.0) || !std::isfinite(c.integrator.t_end)) throw ConfigError("integrator: requires t_end > 0");
  if (c.integrator.sample_every < 1) throw ConfigError("integrator: requires sample_every >= 1");
  if (!(c.integrator.dt >= 0.0)) throw ConfigError("integrator: requires dt >= 0");
  if (!(c.initial.floor > 0.0)) throw ConfigError("initial: requires floor > 0");
  if (c.output.precision < 1 || c.output.precision > 17) throw ConfigError("output: requires 1 <= precision <= 17");
}

/// Realized initial state; refuses densities below the configured floor.
inline State initial_state(const RunConfig& c) {
  const Grid g = c.make_grid();
  State s{0.0, realize(c.initial.rho0, g), realize(c.initial.u0, g)};
  const double m = s.rho.min();
  if (!(m >= c.initial.floor)) {
    throw ConfigError("initial: density minimum " + std::to_string(m) + " is below the floor " +
                      std::to_string(c.initial.floor));
  }
  if (!s.rho.all_finite() || !s.u.all_finite()) throw ConfigError("initial: nonfinite initial data");
  return s;
}

/// The settings of the reference run used throughout the tests.
inline RunConfig reference_config() {
  RunConfig c;
  c.grid = {256, 1.0};
  c.exponents = {1.0, -1.0, 2.0, 0.01};
  c.integrator.cfl = 0.25;
  c.integrator.t_end = 0.05;
  return c;
}

}  // namespace nsk

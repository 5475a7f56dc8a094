#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "nsk/grid.hpp"

namespace nsk::test {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double rel_err(double got, double want) {
  const double d = std::abs(got - want);
  return want == 0.0 ? d : d / std::abs(want);
}

inline double max_rel_diff(const PeriodicField& a, const PeriodicField& b) {
  double scale = std::max(b.max_abs(), 1e-300);
  return (a - b).max_abs() / scale;
}

/// Random field with Fourier modes 1..max_mode (amplitudes decaying like 1/k) plus `offset`.
inline PeriodicField random_band_limited(const Grid& g, std::mt19937_64& rng, int max_mode, double offset = 0.0) {
  std::normal_distribution<double> c(0.0, 1.0);
  std::vector<double> a(max_mode + 1), b(max_mode + 1);
  for (int k = 1; k <= max_mode; ++k) {
    a[k] = c(rng) / k;
    b[k] = c(rng) / k;
  }
  return PeriodicField::from_function(g, [&](double x) {
    double v = offset;
    for (int k = 1; k <= max_mode; ++k) {
      v += a[k] * std::cos(kTwoPi * k * x / g.length()) + b[k] * std::sin(kTwoPi * k * x / g.length());
    }
    return v;
  });
}

inline PeriodicField sine_profile(const Grid& g, double mean, double amp, int k = 1) {
  return PeriodicField::from_function(g, [=](double x) { return mean + amp * std::sin(kTwoPi * k * x / g.length()); });
}

}  // namespace nsk::test

#pragma once

// Uniform periodic grid on the flat torus [0, L) and Fourier-spectral calculus
// (differentiation, rectangle-rule quadrature, two-thirds dealiasing).

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nsk/error.hpp"

namespace nsk {

class Grid {
 public:
  /// n must be a power of two with n >= 8, length must be positive.
  Grid(std::size_t n, double length) : n_(n), length_(length) {
    if (n < 8 || (n & (n - 1)) != 0) {
      throw ConfigError("grid: n must be a power of two >= 8 (got " + std::to_string(n) + ")");
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw ConfigError("grid: length must be positive (got " + std::to_string(length) + ")");
    }
  }

  std::size_t n() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / static_cast<double>(n_); }
  double node(std::size_t j) const noexcept { return static_cast<double>(j) * length_ / static_cast<double>(n_); }
  /// Angular wavenumber of Fourier mode m.
  double wavenumber(std::size_t m) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(m) / length_;
  }
  /// Number of r2c coefficients (n/2 + 1).
  std::size_t modes() const noexcept { return n_ / 2 + 1; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t n_;
  double length_;
};

inline Grid make_grid(std::size_t n, double length = 1.0) { return Grid(n, length); }

/// Real samples of a periodic function at the nodes of a Grid.
class PeriodicField {
 public:
  explicit PeriodicField(const Grid& grid, double fill = 0.0) : grid_(grid), values_(grid.n(), fill) {}

  PeriodicField(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.n()) {
      throw ConfigError("field: value count " + std::to_string(values_.size()) + " does not match grid size " +
                        std::to_string(grid_.n()));
    }
  }

  template <class F>
  static PeriodicField from_function(const Grid& grid, F&& f) {
    PeriodicField out(grid);
    for (std::size_t j = 0; j < grid.n(); ++j) out.values_[j] = f(grid.node(j));
    return out;
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t j) const noexcept { return values_[j]; }
  double& operator[](std::size_t j) noexcept { return values_[j]; }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  template <class F>
  PeriodicField map(F&& f) const {
    PeriodicField out(grid_);
    for (std::size_t j = 0; j < values_.size(); ++j) out.values_[j] = f(values_[j]);
    return out;
  }

  PeriodicField& operator+=(const PeriodicField& o) { return zip(o, [](double a, double b) { return a + b; }); }
  PeriodicField& operator-=(const PeriodicField& o) { return zip(o, [](double a, double b) { return a - b; }); }
  PeriodicField& operator*=(const PeriodicField& o) { return zip(o, [](double a, double b) { return a * b; }); }
  PeriodicField& operator/=(const PeriodicField& o) { return zip(o, [](double a, double b) { return a / b; }); }
  PeriodicField& operator+=(double s) {
    for (double& v : values_) v += s;
    return *this;
  }
  PeriodicField& operator-=(double s) { return *this += -s; }
  PeriodicField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  PeriodicField& operator/=(double s) { return *this *= 1.0 / s; }

 private:
  template <class Op>
  PeriodicField& zip(const PeriodicField& o, Op op) {
    if (!(o.grid_ == grid_)) throw ConfigError("field: grid mismatch in elementwise operation");
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] = op(values_[j], o.values_[j]);
    return *this;
  }

  Grid grid_;
  std::vector<double> values_;
};

inline PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
inline PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
inline PeriodicField operator*(PeriodicField a, const PeriodicField& b) { return a *= b; }
inline PeriodicField operator/(PeriodicField a, const PeriodicField& b) { return a /= b; }
inline PeriodicField operator+(PeriodicField a, double s) { return a += s; }
inline PeriodicField operator+(double s, PeriodicField a) { return a += s; }
inline PeriodicField operator-(PeriodicField a, double s) { return a -= s; }
inline PeriodicField operator-(double s, PeriodicField a) {
  return a.map([s](double v) { return s - v; });
}
inline PeriodicField operator*(PeriodicField a, double s) { return a *= s; }
inline PeriodicField operator*(double s, PeriodicField a) { return a *= s; }
inline PeriodicField operator/(PeriodicField a, double s) { return a /= s; }
inline PeriodicField operator/(double s, const PeriodicField& a) {
  return a.map([s](double v) { return s / v; });
}
inline PeriodicField operator-(const PeriodicField& a) {
  return a.map([](double v) { return -v; });
}

inline PeriodicField pow(const PeriodicField& f, double p) {
  return f.map([p](double v) { return std::pow(v, p); });
}
inline PeriodicField log(const PeriodicField& f) {
  return f.map([](double v) { return std::log(v); });
}
inline PeriodicField exp(const PeriodicField& f) {
  return f.map([](double v) { return std::exp(v); });
}
inline PeriodicField sqrt(const PeriodicField& f) {
  return f.map([](double v) { return std::sqrt(v); });
}
inline PeriodicField abs(const PeriodicField& f) {
  return f.map([](double v) { return std::abs(v); });
}
inline PeriodicField square(const PeriodicField& f) {
  return f.map([](double v) { return v * v; });
}

namespace spectral {

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.r2c);
      fftw_destroy_plan(p.c2r);
    }
  }

  // FFTW planning is not thread safe; execution with the new-array interface is.
  Plans get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(n);
    Spectrum cplx(n / 2 + 1);
    auto* c = reinterpret_cast<fftw_complex*>(cplx.data());
    const auto flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    Plans p;
    p.r2c = fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(), c, flags);
    p.c2r = fftw_plan_dft_c2r_1d(static_cast<int>(n), c, real.data(), flags);
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

inline Plans plans_for(std::size_t n) {
  static PlanCache cache;
  return cache.get(n);
}

}  // namespace detail

/// Unnormalized forward transform: F_m = sum_j f_j exp(-2 pi i m j / n), m = 0..n/2.
inline Spectrum forward(const PeriodicField& f) {
  const auto n = f.grid().n();
  Spectrum out(n / 2 + 1);
  std::vector<double> in(f.values().begin(), f.values().end());
  fftw_execute_dft_r2c(detail::plans_for(n).r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Inverse of forward (includes the 1/n normalization). Consumes the spectrum.
inline PeriodicField inverse(const Grid& grid, Spectrum spectrum) {
  const auto n = grid.n();
  std::vector<double> out(n);
  fftw_execute_dft_c2r(detail::plans_for(n).c2r, reinterpret_cast<fftw_complex*>(spectrum.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return PeriodicField(grid, std::move(out));
}

/// Multiplier (i k)^order for mode m, with the Nyquist mode zeroed for odd orders.
inline std::complex<double> derivative_symbol(const Grid& grid, std::size_t m, int order) {
  const std::size_t n = grid.n();
  if (m == n / 2 && (order % 2) != 0) return {0.0, 0.0};
  const double k = grid.wavenumber(m);
  switch (order) {
    case 1: return {0.0, k};
    case 2: return {-k * k, 0.0};
    case 3: return {0.0, -k * k * k};
    default: break;
  }
  throw UnsupportedError("deriv: order must be in {1,2,3} (got " + std::to_string(order) + ")");
}

inline PeriodicField apply_symbol(const PeriodicField& f, const Spectrum& fhat, int order) {
  const Grid& g = f.grid();
  Spectrum work(fhat.size());
  for (std::size_t m = 0; m < fhat.size(); ++m) work[m] = fhat[m] * derivative_symbol(g, m, order);
  return inverse(g, std::move(work));
}

/// Highest retained mode under the two-thirds rule: |m| <= n/3.
inline std::size_t dealias_cutoff(const Grid& g) { return g.n() / 3; }

/// Fraction of the nonmean spectral energy carried by the top `top_fraction` of modes.
inline double modal_tail_fraction(const PeriodicField& f, double top_fraction = 0.1) {
  const auto fhat = forward(f);
  const std::size_t count = fhat.size();
  const auto first_tail = static_cast<std::size_t>(std::floor(static_cast<double>(count) * (1.0 - top_fraction)));
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t m = 1; m < count; ++m) {
    const double e = std::norm(fhat[m]);
    total += e;
    if (m >= first_tail) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

/// Squared L2 norm from the Fourier coefficients (Parseval side of integrate(f*f)).
inline double modal_norm_squared(const PeriodicField& f) {
  const auto fhat = forward(f);
  const std::size_t n = f.grid().n();
  double s = std::norm(fhat[0]);
  for (std::size_t m = 1; m < fhat.size(); ++m) {
    const double weight = (m == n / 2) ? 1.0 : 2.0;
    s += weight * std::norm(fhat[m]);
  }
  return s * f.grid().length() / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace spectral

/// Spectral derivative of order 1, 2 or 3.
inline PeriodicField deriv(const PeriodicField& f, int order = 1) {
  if (order < 1 || order > 3) {
    throw UnsupportedError("deriv: order must be in {1,2,3} (got " + std::to_string(order) + ")");
  }
  return spectral::apply_symbol(f, spectral::forward(f), order);
}

/// First `count` derivatives from a single forward transform.
template <std::size_t Count>
std::array<PeriodicField, Count> derivs(const PeriodicField& f) {
  static_assert(Count >= 1 && Count <= 3);
  const auto fhat = spectral::forward(f);
  return [&]<std::size_t... I>(std::index_sequence<I...>) {
    return std::array<PeriodicField, Count>{spectral::apply_symbol(f, fhat, static_cast<int>(I) + 1)...};
  }(std::make_index_sequence<Count>{});
}

/// Rectangle rule on the torus: spacing * sum of samples.
inline double integrate(const PeriodicField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().spacing();
}

inline double mean(const PeriodicField& f) { return integrate(f) / f.grid().length(); }

/// L2 norm (rectangle rule).
inline double l2_norm(const PeriodicField& f) { return std::sqrt(integrate(square(f))); }

/// Two-thirds rule: zero every Fourier mode with |m| > n/3.
inline PeriodicField dealias(const PeriodicField& f) {
  auto fhat = spectral::forward(f);
  const std::size_t cutoff = spectral::dealias_cutoff(f.grid());
  for (std::size_t m = cutoff + 1; m < fhat.size(); ++m) fhat[m] = 0.0;
  return spectral::inverse(f.grid(), std::move(fhat));
}

/// Spectral interpolation of a field onto a finer grid of the same length.
inline PeriodicField refine(const PeriodicField& f, std::size_t n_fine) {
  const Grid& g = f.grid();
  if (n_fine < g.n()) throw ConfigError("refine: target grid must not be coarser");
  const Grid fine(n_fine, g.length());
  auto fhat = spectral::forward(f);
  spectral::Spectrum out(fine.modes(), {0.0, 0.0});
  const double scale = static_cast<double>(n_fine) / static_cast<double>(g.n());
  for (std::size_t m = 0; m < fhat.size(); ++m) out[m] = fhat[m] * scale;
  if (n_fine > g.n()) out[g.n() / 2] *= 0.5;  // split the coarse Nyquist mode between +/- m
  return spectral::inverse(fine, std::move(out));
}

}  // namespace nsk

#pragma once

// Admissibility of power-law exponents for the coercivity condition J >= 0:
// closed-form coefficient tests, random positive profiles, the (alpha, beta)
// raster and a derivative-free search for negative-J profiles.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nsk/coefficients.hpp"
#include "nsk/error.hpp"
#include "nsk/functionals.hpp"
#include "nsk/grid.hpp"

namespace nsk {

/// Absolute tolerance on the defining equalities of a boundary verdict.
inline constexpr double kBoundaryTolerance = 1e-12;

enum class Analytic { admissible, boundary, inadmissible };

inline const char* to_string(Analytic a) {
  switch (a) {
    case Analytic::admissible: return "admissible";
    case Analytic::boundary: return "boundary";
    case Analytic::inadmissible: return "inadmissible";
  }
  return "?";
}

/// Sign coefficient of J for k = rho^beta, mu = rho^alpha:
/// (alpha-beta-1)(1-alpha)/(alpha+beta+1)^2 - beta/(3(alpha+beta+1)) + 1/9.
inline double coefficient_1d(double alpha, double beta) {
  const double s = alpha + beta + 1.0;
  if (std::abs(s) <= kBoundaryTolerance) {
    throw UnsupportedError("coefficient_1d: alpha + beta + 1 = 0 is the logarithmic branch; use admissible_power");
  }
  return (alpha - beta - 1.0) * (1.0 - alpha) / (s * s) - beta / (3.0 * s) + 1.0 / 9.0;
}

/// Sign coefficient on the delta line: (delta-1)^2/9 - delta(delta-1)/6.
inline double coefficient_delta(double delta) {
  return (delta - 1.0) * (delta - 1.0) / 9.0 - delta * (delta - 1.0) / 6.0;
}

/// Profile found by counterexample_search. The density is
///   rho ~ exp(power * log g),  log g = log sqrt(s^2 + eta^2) - b log(1 + a s^2) + c cos(2 pi x)
///                                      + sum_k (p_k cos(2 pi k x) + q_k sin(2 pi k x)),  s = sin(pi x),
/// rescaled to mean 2 on the unit torus, so it can be re-evaluated on any grid.
struct CounterexampleProfile {
  double power = 1.0;
  double eta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  std::vector<double> cos_coef;
  std::vector<double> sin_coef;
  std::size_t n = 0;            // grid the search accepted it on
  double j_value = 0.0;         // theta-form J at n
  double j_refined = 0.0;       // theta-form J at 2n
  double j_direct_refined = 0.0;  // direct J at 2n
  std::size_t evaluations = 0;  // J evaluations spent
  std::uint64_t seed = 0;

  PeriodicField evaluate(const Grid& grid) const {
    const double two_pi = 2.0 * std::numbers::pi;
    auto lg = PeriodicField::from_function(grid, [&](double x) {
      const double s = std::sin(std::numbers::pi * x / grid.length());
      const double y = two_pi * x / grid.length();
      double v = 0.5 * std::log(s * s + eta * eta) - b * std::log1p(a * s * s) + c * std::cos(y);
      for (std::size_t k = 0; k < cos_coef.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        v += cos_coef[k] * std::cos(kk * y) + sin_coef[k] * std::sin(kk * y);
      }
      return power * v;
    });
    const double top = lg.max();
    auto rho = exp(lg - top);
    return rho * (2.0 / mean(rho));
  }
};

struct AdmissibilityVerdict {
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> delta;  // set for verdicts on the delta line
  Analytic analytic = Analytic::admissible;
  /// coefficient_1d, or alpha (1 - alpha)/2 on the theta = 0 branch, or coefficient_delta.
  double coefficient_value = 0.0;
  /// min over sampled profiles of J / (sum of absolute contributions); 0 when nothing was sampled.
  double sampled_min_J = 0.0;
  std::size_t samples = 0;
  std::size_t resolution_warnings = 0;
  std::optional<CounterexampleProfile> counterexample;
  std::uint64_t seed = 0;
};

inline bool is_theta_zero(double alpha, double beta) { return std::abs(alpha + beta + 1.0) <= kBoundaryTolerance; }

/// Classification by 2 alpha - 4 <= beta <= 2 alpha - 1 (equalities within 1e-12 are boundary).
/// On theta = 0 this coincides with 0 < alpha <= 1.
inline AdmissibilityVerdict admissible_power(double alpha, double beta) {
  AdmissibilityVerdict v;
  v.alpha = alpha;
  v.beta = beta;
  const double lower = 2.0 * alpha - 4.0;
  const double upper = 2.0 * alpha - 1.0;
  if (std::abs(beta - lower) <= kBoundaryTolerance || std::abs(beta - upper) <= kBoundaryTolerance) {
    v.analytic = Analytic::boundary;
  } else if (beta > lower && beta < upper) {
    v.analytic = Analytic::admissible;
  } else {
    v.analytic = Analytic::inadmissible;
  }
  if (is_theta_zero(alpha, beta)) {
    v.coefficient_value = 0.5 * alpha * (1.0 - alpha);
    if (v.analytic != Analytic::boundary) v.analytic = (alpha > 0.0 && alpha <= 1.0) ? Analytic::admissible : Analytic::inadmissible;
  } else {
    v.coefficient_value = coefficient_1d(alpha, beta);
  }
  return v;
}

/// Classification on the delta line: admissible iff -2 <= delta <= 1.
inline AdmissibilityVerdict admissible_delta(double delta) {
  AdmissibilityVerdict v;
  v.delta = delta;
  v.coefficient_value = coefficient_delta(delta);
  if (std::abs(delta - 1.0) <= kBoundaryTolerance || std::abs(delta + 2.0) <= kBoundaryTolerance) {
    v.analytic = Analytic::boundary;
  } else if (delta > -2.0 && delta < 1.0) {
    v.analytic = Analytic::admissible;
  } else {
    v.analytic = Analytic::inadmissible;
  }
  return v;
}

/// Existence range: 2 alpha - 3 <= beta < 2 alpha - 1, alpha > 1/2, beta > -2.
inline bool theorem_main_range(double alpha, double beta) {
  return beta >= 2.0 * alpha - 3.0 && beta < 2.0 * alpha - 1.0 && alpha > 0.5 && beta > -2.0;
}

/// Euclidean distance in the (alpha, beta) plane to the nearer of beta = 2 alpha - 1, beta = 2 alpha - 4.
inline double distance_to_boundary(double alpha, double beta) {
  const double r5 = std::sqrt(5.0);
  return std::min(std::abs(beta - 2.0 * alpha + 1.0), std::abs(beta - 2.0 * alpha + 4.0)) / r5;
}

struct ProfileOptions {
  int min_modes = 3;
  int max_modes = 6;
  int max_wavenumber = 8;
  double floor = 0.2;
  double min_amplitude = 0.2;  // peak-to-trough
  double max_amplitude = 3.0;
};

/// Smooth positive field with min_modes..max_modes random Fourier modes and grid minimum >= floor.
inline PeriodicField random_positive_profile(const Grid& grid, std::mt19937_64& rng, const ProfileOptions& opt = {}) {
  std::uniform_int_distribution<int> count_dist(opt.min_modes, opt.max_modes);
  std::normal_distribution<double> coef(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> pool(static_cast<std::size_t>(opt.max_wavenumber));
  for (int k = 0; k < opt.max_wavenumber; ++k) pool[static_cast<std::size_t>(k)] = k + 1;
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto count = static_cast<std::size_t>(count_dist(rng));
  std::vector<std::array<double, 3>> modes;
  for (std::size_t i = 0; i < count; ++i) {
    const double k = pool[i];
    modes.push_back({k, coef(rng) / k, coef(rng) / k});
  }
  const double two_pi_l = 2.0 * std::numbers::pi / grid.length();
  auto g = PeriodicField::from_function(grid, [&](double x) {
    double v = 0.0;
    for (const auto& [k, a, b] : modes) v += a * std::cos(k * two_pi_l * x) + b * std::sin(k * two_pi_l * x);
    return v;
  });
  const double lo = g.min();
  const double span = std::max(g.max() - lo, 1e-300);
  const double amp = opt.min_amplitude + (opt.max_amplitude - opt.min_amplitude) * unit(rng);
  const double lift = unit(rng);
  return (g - lo) * (amp / span) + (opt.floor + lift);
}

/// Normalized J = J / scale of the theta form (or the log form at theta = 0).
inline double normalized_j(const JThetaTerms& t) { return t.scale > 0.0 ? t.value / t.scale : 0.0; }

struct SamplingResult {
  double min_normalized = 0.0;
  std::size_t samples = 0;
  std::size_t resolution_warnings = 0;
};

/// Evaluates J on `count` random positive profiles and records the smallest J / scale.
inline SamplingResult sample_min_j(double alpha, double beta, std::size_t count, std::mt19937_64& rng,
                                   std::size_t n = 256, const ProfileOptions& opt = {}) {
  const Grid grid(n, 1.0);
  SamplingResult r;
  r.min_normalized = INFINITY;
  for (std::size_t i = 0; i < count; ++i) {
    const auto rho = random_positive_profile(grid, rng, opt);
    const auto t = j_theta_terms(rho, alpha, beta);
    r.min_normalized = std::min(r.min_normalized, normalized_j(t));
    if (spectral::modal_tail_fraction(rho) >= kResolutionTailLimit) ++r.resolution_warnings;
    ++r.samples;
  }
  if (count == 0) r.min_normalized = 0.0;
  return r;
}

struct SearchOptions {
  std::size_t budget = 5000;  // number of J evaluations
  std::uint64_t seed = 0;
  std::size_t start_n = 256;
  std::size_t max_n = 16384;
  std::size_t fourier_modes = 3;
  /// Cap on |power| * |log eta|, i.e. on the number of e-folds rho spans.
  double max_log_range = 10.0;
  /// Modal tail allowed for rho during the search. Tighter than the J guard because the
  /// direct form differentiates products of powers of rho.
  double resolution_tail = 1e-10;
};

namespace detail {

// Coordinates: log eta, log a, b, c, log |power|, p_1..p_K, q_1..q_K.
struct SearchPoint {
  std::vector<double> x;
  double objective = INFINITY;
  JThetaTerms terms;
};

inline CounterexampleProfile make_profile(const std::vector<double>& x, double power_sign, std::size_t modes) {
  CounterexampleProfile p;
  p.eta = std::exp(x[0]);
  p.a = std::exp(x[1]);
  p.b = std::clamp(x[2], 0.0, 2.0);
  p.c = x[3];
  p.power = power_sign * std::exp(x[4]);
  p.cos_coef.assign(x.begin() + 5, x.begin() + 5 + static_cast<std::ptrdiff_t>(modes));
  p.sin_coef.assign(x.begin() + 5 + static_cast<std::ptrdiff_t>(modes), x.end());
  return p;
}

}  // namespace detail

/// Derivative-free search for a positive profile with J < 0 at an inadmissible (alpha, beta).
///
/// Coordinate (compass) search over the parameters of CounterexampleProfile, i.e. over
/// Fourier coefficients of log rho on top of a warm start that approaches vacuum at one
/// point. With rho^theta = g^(3/2) and eta -> 0 the Bernis ratio of rho^theta tends to 1/9,
/// which is what makes J < 0 reachable for every inadmissible pair; the approach is only
/// logarithmic in eta, so cells close to the boundary need fine grids. The search climbs a
/// ladder of grids from start_n to max_n, tying eta to the grid spacing. A candidate is
/// accepted only if J stays negative when the profile is re-evaluated on a grid twice as
/// fine, in both the theta form and the direct form.
inline std::optional<CounterexampleProfile> counterexample_search(double alpha, double beta,
                                                                  const SearchOptions& opt = {}) {
  const auto verdict = admissible_power(alpha, beta);
  if (verdict.analytic != Analytic::inadmissible) {
    throw ConfigError("counterexample_search: (alpha, beta) = (" + std::to_string(alpha) + ", " +
                      std::to_string(beta) + ") is " + to_string(verdict.analytic) + "; J >= 0 holds there");
  }
  if (!(alpha > 0.0)) throw ConfigError("counterexample_search: requires alpha > 0");
  const bool log_branch = is_theta_zero(alpha, beta);
  const double theta = 0.5 * (alpha + beta + 1.0);
  const double delta = beta - 2.0 * alpha + 2.0;
  const auto law = CoefficientLaw::general(alpha, delta, 0.0, 1.0 / (alpha * alpha));
  const std::size_t modes = opt.fourier_modes;
  const double power_sign = (log_branch || theta > 0.0) ? 1.0 : -1.0;

  std::mt19937_64 rng(opt.seed);
  std::size_t evals = 0;

  // Narrowest vacuum the grid resolves, starting from eta = 8 h.
  auto warm_start = [&](std::size_t n) {
    const Grid grid(n, 1.0);
    std::vector<double> x(5 + 2 * modes, 0.0);
    x[1] = std::log(6.0);
    x[2] = 0.28;
    x[3] = -0.05;
    // rho^theta = g^(3/2); on the log branch only the amplitude of log rho matters
    const double ideal = log_branch ? 1.0 : 1.5 / std::abs(theta);
    for (double eta = 8.0 / static_cast<double>(n); eta < 1.0; eta *= 1.1) {
      x[0] = std::log(eta);
      x[4] = std::log(std::min(ideal, opt.max_log_range / std::abs(std::log(eta))));
      const auto rho = detail::make_profile(x, power_sign, modes).evaluate(grid);
      if (rho.all_finite() && spectral::modal_tail_fraction(rho) < opt.resolution_tail) break;
    }
    return x;
  };

  std::vector<double> step(5 + 2 * modes, 0.02);
  step[0] = 0.5;
  step[1] = 0.3;
  step[2] = 0.05;
  step[3] = 0.05;
  step[4] = 0.2;

  auto evaluate = [&](const std::vector<double>& p, std::size_t n) {
    const Grid grid(n, 1.0);
    const auto rho = detail::make_profile(p, power_sign, modes).evaluate(grid);
    ++evals;
    detail::SearchPoint sp;
    sp.x = p;
    if (std::exp(p[4]) * std::abs(p[0]) > opt.max_log_range) return sp;
    if (!rho.all_finite() || !(rho.min() > 0.0)) return sp;
    // rho itself must be resolved, not only rho^theta: the direct form works on rho
    if (spectral::modal_tail_fraction(rho) >= opt.resolution_tail) return sp;
    sp.terms = j_theta_terms(rho, alpha, beta);
    sp.objective = std::isfinite(sp.terms.value) ? normalized_j(sp.terms) : INFINITY;
    return sp;
  };

  auto verify = [&](const detail::SearchPoint& sp, std::size_t n) -> std::optional<CounterexampleProfile> {
    auto profile = detail::make_profile(sp.x, power_sign, modes);
    const Grid fine(2 * n, 1.0);
    const auto rho = profile.evaluate(fine);
    evals += 2;
    if (!rho.all_finite() || !(rho.min() > 0.0)) return std::nullopt;
    const auto refined = j_theta_terms(rho, alpha, beta);
    const double jr = refined.value;
    const double jd = j_direct(rho, law);
    if (!(jr < 0.0 && jd < 0.0)) return std::nullopt;
    if (std::abs(jd - jr) > 1e-6 * refined.scale) return std::nullopt;
    profile.n = n;
    profile.j_value = sp.terms.value;
    profile.j_refined = jr;
    profile.j_direct_refined = jd;
    profile.seed = opt.seed;
    profile.evaluations = evals;
    return profile;
  };

  std::vector<std::size_t> ladder;
  for (std::size_t n = opt.start_n; n <= opt.max_n; n *= 4) ladder.push_back(n);
  if (ladder.empty()) ladder.push_back(opt.start_n);

  // The warm start alone settles every cell that is not close to the boundary.
  for (std::size_t n : ladder) {
    if (evals + 3 > opt.budget) return std::nullopt;
    const auto sp = evaluate(warm_start(n), n);
    if (sp.objective < 0.0) {
      if (auto found = verify(sp, n)) return found;
    }
  }

  std::vector<double> carried;
  for (std::size_t level = 0; level < ladder.size(); ++level) {
    const std::size_t n = ladder[level];
    const std::size_t levels_left = ladder.size() - level;
    const std::size_t stop_at = evals + (opt.budget > evals ? opt.budget - evals : 0) / levels_left;

    auto best = evaluate(warm_start(n), n);
    if (!carried.empty()) {
      carried[0] += std::log(static_cast<double>(ladder[level - 1]) / static_cast<double>(n));
      auto c = evaluate(carried, n);
      if (c.objective < best.objective) best = std::move(c);
    }
    auto local_step = step;
    std::vector<std::size_t> order(step.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    while (evals + 3 <= stop_at) {
      if (best.objective < 0.0) {
        if (auto found = verify(best, n)) return found;
      }
      bool improved = false;
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        if (evals + 3 > stop_at) break;
        for (double sign : {1.0, -1.0}) {
          auto trial = best.x;
          trial[i] += sign * local_step[i];
          auto cand = evaluate(trial, n);
          if (cand.objective < best.objective) {
            best = std::move(cand);
            local_step[i] *= 1.5;
            improved = true;
            break;
          }
        }
        if (best.objective < 0.0) break;
      }
      if (!improved) {
        bool alive = false;
        for (double& s : local_step) {
          s *= 0.5;
          alive = alive || s > 1e-7;
        }
        if (!alive) break;
      }
    }
    carried = best.x;
  }
  return std::nullopt;
}

struct MapOptions {
  double alpha_min = 0.6;
  double alpha_max = 3.0;
  double beta_min = -3.0;
  double beta_max = 5.0;
  std::size_t resolution = 25;
  std::size_t samples_per_cell = 200;
  std::size_t sample_n = 256;
  bool search = true;
  /// Only cells at least this far from the boundary lines are searched.
  double search_distance = 0.5;
  SearchOptions search_options{};
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// Deterministic per-cell seed.
inline std::uint64_t cell_seed(std::uint64_t seed, std::size_t i, std::size_t j) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline double raster_coordinate(double lo, double hi, std::size_t i, std::size_t res) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(res - 1);
}

/// Analytic verdict, sampled minimum of J / scale and (optionally) a searched counterexample
/// for every cell of a res x res raster, row-major in alpha. Cells are independent and may
/// be evaluated by `jobs` threads; the result does not depend on the thread count.
inline std::vector<AdmissibilityVerdict> admissibility_map(const MapOptions& opt) {
  if (opt.resolution < 2) throw ConfigError("admissibility_map: resolution must be >= 2");
  if (!(std::isfinite(opt.alpha_min) && std::isfinite(opt.alpha_max) && std::isfinite(opt.beta_min) &&
        std::isfinite(opt.beta_max)) ||
      !(opt.alpha_max > opt.alpha_min) || !(opt.beta_max > opt.beta_min)) {
    throw ConfigError("admissibility_map: ranges must be finite and nonempty");
  }
  if (!(opt.alpha_min > 0.0)) throw ConfigError("admissibility_map: requires alpha > 0");
  const std::size_t res = opt.resolution;
  std::vector<AdmissibilityVerdict> cells(res * res);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t idx = next++; idx < cells.size(); idx = next++) {
      const std::size_t i = idx / res;
      const std::size_t j = idx % res;
      const double a = raster_coordinate(opt.alpha_min, opt.alpha_max, i, res);
      const double b = raster_coordinate(opt.beta_min, opt.beta_max, j, res);
      auto v = admissible_power(a, b);
      v.seed = cell_seed(opt.seed, i, j);
      std::mt19937_64 rng(v.seed);
      const auto s = sample_min_j(a, b, opt.samples_per_cell, rng, opt.sample_n);
      v.sampled_min_J = s.min_normalized;
      v.samples = s.samples;
      v.resolution_warnings = s.resolution_warnings;
      if (opt.search && v.analytic == Analytic::inadmissible && distance_to_boundary(a, b) >= opt.search_distance) {
        auto so = opt.search_options;
        so.seed = v.seed;
        v.counterexample = counterexample_search(a, b, so);
      }
      cells[idx] = std::move(v);
    }
  };

  const unsigned jobs = std::max(1u, opt.jobs);
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(work);
  }
  return cells;
}

}  // namespace nsk

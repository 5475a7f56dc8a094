#pragma once

// Pseudo-spectral RK4 integration of the regularized Navier-Stokes-Korteweg system
//   rho_t + (rho u)_x = 0
//   (rho u)_t + (rho u^2)_x - (mu u_x)_x + (rho^gamma)_x
//       = s rho (rho^delta mu' mu_xx)_x + s (delta/2) rho (rho^(delta-1) |mu_x|^2)_x,   s = k_scale
// with the momentum equation advanced in velocity form.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <utility>
#include <vector>

#include "nsk/coefficients.hpp"
#include "nsk/diagnostics.hpp"
#include "nsk/error.hpp"
#include "nsk/grid.hpp"
#include "nsk/state.hpp"

namespace nsk {

inline constexpr double kMinTimeStep = 1e-12;

namespace detail {

/// Derivative of order `order` with every mode above n/3 removed.
inline PeriodicField ddx_dealiased(const PeriodicField& f, int order = 1) {
  auto fhat = spectral::forward(f);
  const std::size_t cutoff = spectral::dealias_cutoff(f.grid());
  for (std::size_t m = cutoff + 1; m < fhat.size(); ++m) fhat[m] = 0.0;
  return spectral::apply_symbol(f, fhat, order);
}

}  // namespace detail

struct Tendency {
  PeriodicField d_rho;
  PeriodicField d_u;
};

/// Capillary force of the momentum equation in the two-term delta form.
inline PeriodicField korteweg_delta_form(const PeriodicField& rho, const CoefficientLaw& law) {
  const double d = law.delta();
  const auto mu_f = rho.map([&](double r) { return law.mu(r); });
  const auto [mx, mxx] = derivs<2>(mu_f);
  PeriodicField a(rho.grid()), b(rho.grid());
  for (std::size_t j = 0; j < rho.size(); ++j) {
    const double r = rho[j];
    const double rd = std::pow(r, d);
    a[j] = rd * law.mu_prime(r) * mxx[j];
    b[j] = 0.5 * d * rd / r * mx[j] * mx[j];
  }
  return law.k_scale() * rho * detail::ddx_dealiased(a + b);
}

inline Tendency rhs(const State& s, const Model& model) {
  const auto& rho = s.rho;
  const auto& u = s.u;
  if (!(rho.min() > 0.0)) throw PositivityError("rhs", rho.min());
  const auto& law = model.law;
  const double g = model.gamma();

  const auto ux = detail::ddx_dealiased(u);
  PeriodicField mass_flux(rho.grid()), mom_flux(rho.grid());
  for (std::size_t j = 0; j < rho.size(); ++j) {
    const double r = rho[j], v = u[j];
    mass_flux[j] = r * v;
    // rho u^2 - mu u_x + rho^gamma
    mom_flux[j] = r * v * v - law.mu(r) * ux[j] + std::pow(r, g);
  }
  auto d_rho = -detail::ddx_dealiased(mass_flux);
  const auto m_t = korteweg_delta_form(rho, law) - detail::ddx_dealiased(mom_flux);
  auto d_u = dealias((m_t - u * d_rho) / rho);
  return {std::move(d_rho), std::move(d_u)};
}

struct StableDtBounds {
  double advective = std::numeric_limits<double>::infinity();
  double viscous = std::numeric_limits<double>::infinity();
  double capillary = std::numeric_limits<double>::infinity();
};

/// The three candidate bounds dx/max|u|, dx^2/max(mu/rho), dx^2/max sqrt(rho k), before the cfl factor.
inline StableDtBounds stable_dt_bounds(const State& s, const Model& model) {
  require_positive(s.rho, "stable_dt");
  const double dx = s.rho.grid().spacing();
  double umax = 0.0, visc = 0.0, cap = 0.0;
  for (std::size_t j = 0; j < s.rho.size(); ++j) {
    const double r = s.rho[j];
    umax = std::max(umax, std::abs(s.u[j]));
    visc = std::max(visc, model.law.mu(r) / r);
    cap = std::max(cap, std::sqrt(r * model.law.k(r)));
  }
  StableDtBounds b;
  if (umax > 0.0) b.advective = dx / umax;
  if (visc > 0.0) b.viscous = dx * dx / visc;
  if (cap > 0.0) b.capillary = dx * dx / cap;
  return b;
}

inline double stable_dt(const State& s, const Model& model, double cfl) {
  const auto b = stable_dt_bounds(s, model);
  const double dt = cfl * std::min({b.advective, b.viscous, b.capillary});
  if (!std::isfinite(dt) || !(dt > kMinTimeStep)) return kMinTimeStep;
  return dt;
}

namespace detail {

inline State stage_state(const State& s, const Tendency& k, double h, int stage) {
  State out{s.t, dealias(s.rho + h * k.d_rho), dealias(s.u + h * k.d_u)};
  if (!out.rho.all_finite() || !out.u.all_finite()) {
    throw StabilityFailure("nonfinite field in RK stage " + std::to_string(stage));
  }
  const double m = out.rho.min();
  if (!(m > 0.0)) throw PositivityFailure(stage, m);
  return out;
}

}  // namespace detail

/// One classical RK4 step. Stage states are dealiased and checked for positivity and finiteness.
inline State step(const State& s, double dt, const Model& model) {
  if (!(dt > 0.0)) throw ConfigError("step: requires dt > 0");
  const auto k1 = rhs(s, model);
  const auto s2 = detail::stage_state(s, k1, 0.5 * dt, 2);
  const auto k2 = rhs(s2, model);
  const auto s3 = detail::stage_state(s, k2, 0.5 * dt, 3);
  const auto k3 = rhs(s3, model);
  const auto s4 = detail::stage_state(s, k3, dt, 4);
  const auto k4 = rhs(s4, model);
  const Tendency sum{k1.d_rho + 2.0 * k2.d_rho + 2.0 * k3.d_rho + k4.d_rho,
                     k1.d_u + 2.0 * k2.d_u + 2.0 * k3.d_u + k4.d_u};
  State out = detail::stage_state(s, sum, dt / 6.0, 5);
  out.t = s.t + dt;
  return out;
}

/// Integrates from the state to `t_end`, recording diagnostics every `sample_every` steps and at the end.
/// Failures end the trajectory early with the reason recorded; they are not rethrown.
inline Trajectory integrate_trajectory(State s, const Model& model, const IntegratorConfig& ic) {
  Trajectory traj;
  ResidualHistory history;
  auto record = [&](const State& st, double dt) {
    auto r = sample(st, model, history, dt);
    history.push(r);
    traj.records.push_back(r);
    traj.states.push_back(st);
  };
  record(s, 0.0);
  const double t_end = ic.t_end;
  std::size_t since_sample = 0;
  try {
    while (s.t < t_end) {
      if (traj.steps >= ic.max_steps) {
        throw StabilityFailure("step limit reached before t_end");
      }
      double dt = ic.dt > 0.0 ? ic.dt : stable_dt(s, model, ic.cfl);
      bool last = false;
      if (s.t + dt >= t_end * (1.0 - 1e-14)) {
        dt = t_end - s.t;
        last = true;
      }
      try {
        s = step(s, dt, model);
      } catch (const PositivityFailure& e) {
        // Past the cfl = 1 bound, lost positivity is the onset of the instability.
        if (dt > stable_dt(s, model, 1.0)) {
          throw StabilityFailure("dt = " + std::to_string(dt) + " exceeds the stability bound; " + e.what());
        }
        throw;
      }
      if (last) s.t = t_end;
      ++traj.steps;
      ++since_sample;
      if (last || since_sample >= static_cast<std::size_t>(ic.sample_every)) {
        record(s, dt);
        since_sample = 0;
      }
    }
  } catch (const PositivityFailure& e) {
    traj.reason = Termination::positivity_failure;
    traj.message = e.what();
  } catch (const StabilityFailure& e) {
    traj.reason = Termination::stability_failure;
    traj.message = e.what();
  }
  return traj;
}

inline Trajectory run(const RunConfig& config) {
  validate(config);
  const Model model(config.params());
  return integrate_trajectory(initial_state(config), model, config.integrator);
}

/// Runs the configurations (one per epsilon, decreasing) and tabulates the uniform bounds.
/// All runs must share grid, exponents other than epsilon, integrator settings and initial data.
inline UniformBoundsReport uniform_bounds_report(const std::vector<RunConfig>& configs, unsigned jobs = 1) {
  if (configs.empty()) throw ConfigError("uniform bounds: no configurations");
  const auto& c0 = configs.front();
  const State s0 = initial_state(c0);
  for (const auto& c : configs) {
    validate(c);
    const bool same = c.grid.n == c0.grid.n && c.grid.length == c0.grid.length &&
                      c.exponents.alpha == c0.exponents.alpha && c.exponents.beta == c0.exponents.beta &&
                      c.exponents.gamma == c0.exponents.gamma && c.integrator.t_end == c0.integrator.t_end &&
                      c.integrator.cfl == c0.integrator.cfl && c.integrator.sample_every == c0.integrator.sample_every &&
                      c.integrator.dt == c0.integrator.dt;
    if (!same) throw ConfigError("uniform bounds: configurations differ in more than epsilon");
    const State s = initial_state(c);
    for (std::size_t j = 0; j < s.rho.size(); ++j) {
      if (s.rho[j] != s0.rho[j] || s.u[j] != s0.u[j]) {
        throw ConfigError("uniform bounds: configurations have different initial data");
      }
    }
  }
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (!(configs[i].exponents.epsilon < configs[i - 1].exponents.epsilon)) {
      throw ConfigError("uniform bounds: epsilon list must be decreasing");
    }
  }

  std::vector<UniformBoundsRow> rows(configs.size());
  std::vector<std::string> failures(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      const auto traj = run(configs[i]);
      if (traj.reason != Termination::completed) {
        failures[i] = std::string(to_string(traj.reason)) + ": " + traj.message;
        continue;
      }
      rows[i] = uniform_bounds_row(traj, Model(configs[i].params()));
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) {
      throw StabilityFailure("uniform bounds: run " + std::to_string(i) + " did not complete (" + failures[i] + ")");
    }
  }
  return assemble_uniform_bounds(std::move(rows));
}

}  // namespace nsk

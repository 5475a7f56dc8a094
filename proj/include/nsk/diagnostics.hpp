#pragma once

// Per-sample monitoring along a trajectory: functionals, the energy and BD
// identity residuals, the vacuum/ceiling quantity, blow-up monitors, the weak
// momentum residual and the epsilon-uniform bound table.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nsk/coefficients.hpp"
#include "nsk/error.hpp"
#include "nsk/functionals.hpp"
#include "nsk/grid.hpp"
#include "nsk/state.hpp"

namespace nsk {

struct BlowupMonitors {
  double inv_rho_max = 0.0;  // max 1/rho
  double a_x_max = 0.0;      // max |d/dx A|
  double u_x_max = 0.0;      // max |u_x|
  double u_xx_max = 0.0;     // max |u_xx|
};

struct DiagnosticsRecord {
  double t = 0.0;
  double dt = 0.0;
  double mass = 0.0;
  double E = 0.0;
  double F = 0.0;
  double J = 0.0;
  double visc_dissipation = 0.0;
  double pressure_dissipation = 0.0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double vacuum_bound = 0.0;  // eps max rho^(-1/4) + max rho
  double energy_residual = 0.0;  // E(t) + int_0^t visc - E(0)
  double bd_residual = 0.0;      // F(t) + int_0^t (pressure + J) - F(0)
  BlowupMonitors blowup;
  double bernis_ratio = 0.0;
};

/// Column names of the diagnostics CSV, in record order.
inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols{
      "t",        "dt",           "mass",         "E",           "F",           "J",
      "visc_dissipation", "pressure_dissipation", "min_rho", "max_rho", "vacuum_bound", "energy_residual",
      "bd_residual", "blowup_inv_rho", "blowup_a_x", "blowup_u_x", "blowup_u_xx", "bernis_ratio"};
  return cols;
}

inline std::vector<double> to_row(const DiagnosticsRecord& r) {
  return {r.t, r.dt, r.mass, r.E, r.F, r.J, r.visc_dissipation, r.pressure_dissipation, r.min_rho, r.max_rho,
          r.vacuum_bound, r.energy_residual, r.bd_residual, r.blowup.inv_rho_max, r.blowup.a_x_max,
          r.blowup.u_x_max, r.blowup.u_xx_max, r.bernis_ratio};
}

inline DiagnosticsRecord from_row(const std::vector<double>& v) {
  if (v.size() != diagnostics_columns().size()) throw ConfigError("diagnostics row: wrong column count");
  DiagnosticsRecord r;
  r.t = v[0];
  r.dt = v[1];
  r.mass = v[2];
  r.E = v[3];
  r.F = v[4];
  r.J = v[5];
  r.visc_dissipation = v[6];
  r.pressure_dissipation = v[7];
  r.min_rho = v[8];
  r.max_rho = v[9];
  r.vacuum_bound = v[10];
  r.energy_residual = v[11];
  r.bd_residual = v[12];
  r.blowup = {v[13], v[14], v[15], v[16]};
  r.bernis_ratio = v[17];
  return r;
}

/// Trapezoid accumulation of the dissipation integrals over previous samples.
class ResidualHistory {
 public:
  bool empty() const noexcept { return !started_; }

  void push(const DiagnosticsRecord& r) {
    if (!started_) {
      e0_ = r.E;
      f0_ = r.F;
      started_ = true;
    } else {
      const double h = r.t - t_;
      visc_ += 0.5 * h * (visc_prev_ + r.visc_dissipation);
      bd_ += 0.5 * h * (bd_prev_ + r.pressure_dissipation + r.J);
    }
    t_ = r.t;
    visc_prev_ = r.visc_dissipation;
    bd_prev_ = r.pressure_dissipation + r.J;
  }

  /// Energy and BD residuals at time t given the integrands there.
  std::pair<double, double> residuals(double t, double E, double F, double visc, double bd_rate) const {
    if (!started_) return {0.0, 0.0};
    const double h = t - t_;
    const double iv = visc_ + 0.5 * h * (visc_prev_ + visc);
    const double ib = bd_ + 0.5 * h * (bd_prev_ + bd_rate);
    return {(E - e0_) + iv, (F - f0_) + ib};
  }

 private:
  bool started_ = false;
  double t_ = 0.0;
  double e0_ = 0.0, f0_ = 0.0;
  double visc_ = 0.0, bd_ = 0.0;
  double visc_prev_ = 0.0, bd_prev_ = 0.0;
};

/// All monitored quantities of one state. Computed here in one pass over shared
/// derivatives rather than through the functionals module, so the two act as
/// independent evaluations of the same integrals.
inline DiagnosticsRecord sample(const State& s, const Model& model, const ResidualHistory& history, double dt = 0.0) {
  const auto& rho = s.rho;
  const auto& u = s.u;
  require_positive(rho, "sample");
  const auto& law = model.law;
  const double g = model.gamma();
  const double h = rho.grid().spacing();
  const std::size_t n = rho.size();

  const auto [rx, rxx] = derivs<2>(rho);
  const auto [ux, uxx] = derivs<2>(u);

  PeriodicField mu_f(rho.grid()), krx(rho.grid()), afac(rho.grid());
  double mass = 0, kin = 0, pres = 0, cap = 0, kin_w = 0, visc = 0, pdiss = 0;
  double inv_rho = 0, rq = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = rho[j];
    const double v = u[j];
    const double mp = law.mu_prime(r);
    const double k = law.k(r);
    const double m = law.mu(r);
    const double rg = std::pow(r, g);
    const double r2 = rx[j] * rx[j];
    const double w = v + mp / r * rx[j];
    mass += r;
    kin += 0.5 * r * v * v;
    kin_w += 0.5 * r * w * w;
    pres += rg / (g - 1.0);
    cap += 0.5 * k * r2;
    visc += m * ux[j] * ux[j];
    pdiss += g * mp * rg / (r * r) * r2;
    inv_rho = std::max(inv_rho, 1.0 / r);
    rq = std::max(rq, std::pow(r, -0.25));
    mu_f[j] = m;
    krx[j] = k * rx[j];
    afac[j] = std::sqrt(k / r) * rx[j];
  }

  // J = int mu_xx [ (k rho_x)_x - k'/2 rho_x^2 ]
  const auto mu_xx = deriv(mu_f, 2);
  const auto krx_x = deriv(krx, 1);
  double jsum = 0;
  for (std::size_t j = 0; j < n; ++j) {
    jsum += mu_xx[j] * (krx_x[j] - 0.5 * law.k_prime(rho[j]) * rx[j] * rx[j]);
  }

  DiagnosticsRecord r;
  r.t = s.t;
  r.dt = dt;
  r.mass = mass * h;
  r.E = (kin + pres + cap) * h;
  r.F = (kin_w + pres + cap) * h;
  r.J = jsum * h;
  r.visc_dissipation = visc * h;
  r.pressure_dissipation = pdiss * h;
  r.min_rho = rho.min();
  r.max_rho = rho.max();
  r.vacuum_bound = law.epsilon() * rq + r.max_rho;
  const auto [er, br] = history.residuals(s.t, r.E, r.F, r.visc_dissipation, r.pressure_dissipation + r.J);
  r.energy_residual = er;
  r.bd_residual = br;
  r.blowup = {inv_rho, deriv(afac, 1).max_abs(), ux.max_abs(), uxx.max_abs()};

  const double theta = std::abs(law.theta()) > kThetaZeroTolerance ? law.theta() : 1.0;
  const auto f = pow(rho, theta);
  const auto [f1, f2] = derivs<2>(f);
  const double lhs = integrate(square(square(f1)) / square(f)) / 9.0;
  const double rhs = integrate(square(f2));
  r.bernis_ratio = rhs > 0.0 ? lhs / rhs : 0.0;
  return r;
}

enum class Termination { completed, positivity_failure, stability_failure };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::positivity_failure: return "positivity_failure";
    case Termination::stability_failure: return "stability_failure";
  }
  return "?";
}

struct Trajectory {
  std::vector<State> states;
  std::vector<DiagnosticsRecord> records;
  Termination reason = Termination::completed;
  std::string message;
  std::size_t steps = 0;
};

/// Not enough samples for a time integral.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// Which Korteweg fluxes enter the weak momentum residual.
enum class KortewegRoute {
  automatic,  // constants for the pure power law, the k_eps fluxes when eps > 0
  constants,  // kappa_1, kappa_2 of the theta decomposition
  general,    // (rho k rho_x, (3k + rho k')/2 |rho_x|^2)
};

struct WeakResidual {
  double max_normalized = 0.0;
  int worst_mode = 0;
  bool worst_is_sine = false;
};

/// Largest normalized weak-form momentum integral
///   int int rho u psi_t + rho u^2 psi_x - mu u_x psi_x + p psi_x + X psi_xx + Y psi_x
/// over psi = b(t) cos(2 pi k x/L) and b(t) sin(2 pi k x/L), 1 <= k <= mode_count, where b is a
/// smooth bump on the sampled time span and (X, Y) are the Korteweg fluxes. Each integral is
/// divided by the largest of its six terms, each term measured as the integral of the absolute
/// value of its integrand so that cancellation inside one term cannot shrink the scale. Time integrals use the
/// trapezoid rule over the samples, so the result measures sampling as well as solver error.
inline WeakResidual weak_residual_momentum(const Trajectory& traj, const Model& model, int mode_count,
                                           KortewegRoute route = KortewegRoute::automatic) {
  const auto& st = traj.states;
  if (st.size() < 5) throw SamplingError("weak_residual_momentum: needs at least 5 samples (got " + std::to_string(st.size()) + ")");
  if (mode_count < 1) throw ConfigError("weak_residual_momentum: mode_count must be >= 1");
  if (route == KortewegRoute::automatic) route = model.law.power_law() ? KortewegRoute::constants : KortewegRoute::general;
  std::optional<KortewegConstants> kc;
  if (route == KortewegRoute::constants) {
    if (std::abs(model.params.theta) <= kThetaZeroTolerance) {
      throw UnsupportedError("weak_residual_momentum: theta = 0 has no theta decomposition");
    }
    kc = korteweg_weak_constants(model.params);
  }

  const double t0 = st.front().t;
  const double t1 = st.back().t;
  const double span = t1 - t0;
  auto bump = [&](double t, double& b, double& db) {
    const double s = (2.0 * t - t0 - t1) / span;
    if (std::abs(s) >= 1.0) {
      b = db = 0.0;
      return;
    }
    const double q = 1.0 - s * s;
    b = std::exp(-1.0 / q);
    db = b * (-2.0 * s / (q * q)) * (2.0 / span);
  };

  const Grid& grid = st.front().rho.grid();
  const double w = 2.0 * std::numbers::pi / grid.length();
  const std::size_t n = grid.n();
  const std::size_t tests = 2 * static_cast<std::size_t>(mode_count);
  // terms[test][term]
  std::vector<std::array<double, 6>> terms(tests, std::array<double, 6>{});
  std::vector<std::array<double, 6>> sizes(tests, std::array<double, 6>{});

  std::vector<double> weights(st.size(), 0.0);
  for (std::size_t i = 0; i + 1 < st.size(); ++i) {
    const double h = st[i + 1].t - st[i].t;
    weights[i] += 0.5 * h;
    weights[i + 1] += 0.5 * h;
  }

  for (std::size_t i = 0; i < st.size(); ++i) {
    double b, db;
    bump(st[i].t, b, db);
    if (b == 0.0 && db == 0.0) continue;
    const auto& rho = st[i].rho;
    const auto& u = st[i].u;
    const auto ux = deriv(u, 1);
    const auto mu_f = mu(rho, model.law);
    const auto flux = kc ? korteweg_weak_fluxes(rho, *kc) : korteweg_weak_fluxes(rho, model.law);
    const double wt = weights[i] * grid.spacing();
    for (int k = 1; k <= mode_count; ++k) {
      const double kw = k * w;
      for (int sine = 0; sine < 2; ++sine) {
        const std::size_t idx = 2 * static_cast<std::size_t>(k - 1) + static_cast<std::size_t>(sine);
        auto& acc = terms[idx];
        auto& size = sizes[idx];
        for (std::size_t j = 0; j < n; ++j) {
          const double x = grid.node(j);
          const double c = std::cos(kw * x), s = std::sin(kw * x);
          const double phi = sine ? s : c;
          const double phi_x = sine ? kw * c : -kw * s;
          const double phi_xx = -kw * kw * phi;
          const double r = rho[j], v = u[j];
          const double v6[6] = {r * v * db * phi,
                                -mu_f[j] * ux[j] * b * phi_x,
                                r * v * v * b * phi_x,
                                std::pow(r, model.gamma()) * b * phi_x,
                                flux.second_order[j] * b * phi_xx,
                                flux.first_order[j] * b * phi_x};
          for (int q = 0; q < 6; ++q) {
            acc[q] += wt * v6[q];
            size[q] += wt * std::abs(v6[q]);
          }
        }
      }
    }
  }

  WeakResidual out;
  for (std::size_t t = 0; t < tests; ++t) {
    double sum = 0.0, biggest = 0.0;
    for (int q = 0; q < 6; ++q) {
      sum += terms[t][q];
      biggest = std::max(biggest, sizes[t][q]);
    }
    const double r = biggest > 0.0 ? std::abs(sum) / biggest : 0.0;
    if (t == 0 || r > out.max_normalized) {
      out.max_normalized = r;
      out.worst_mode = static_cast<int>(t / 2) + 1;
      out.worst_is_sine = (t % 2) == 1;
    }
  }
  return out;
}

/// One row of the epsilon-uniform bound table, computed from a trajectory.
struct UniformBoundsRow {
  double epsilon = 0.0;
  double sup_sqrt_rho_u = 0.0;        // sup_t || sqrt(rho) u ||_2
  double sup_grad_rho_pow = 0.0;      // sup_t || (rho^(alpha - 1/2))_x ||_2
  double l2_visc = 0.0;               // || rho^(alpha/2) u_x ||_{L2(0,T;L2)}
  double l2_pressure_grad = 0.0;      // || (rho^((gamma + alpha - 1)/2))_x ||_{L2 L2}
  double l2_hessian_theta = 0.0;      // || (rho^theta)_xx ||_{L2 L2}
  double l4_grad_half_theta = 0.0;    // || (rho^(theta/2))_x ||_{L4 L4}
  double sup_rho = 0.0;               // sup_t || rho ||_inf
  double eps_inv_quarter = 0.0;       // sup_t eps || rho^(-1/4) ||_inf
  double vacuum_bound_ratio = 0.0;    // max_t (eps max rho^(-1/4) + max rho) / its initial value

  static constexpr std::size_t kColumns = 8;
  std::array<double, kColumns> columns() const {
    return {sup_sqrt_rho_u, sup_grad_rho_pow, l2_visc, l2_pressure_grad, l2_hessian_theta, l4_grad_half_theta,
            sup_rho, eps_inv_quarter};
  }
};

inline const std::array<const char*, UniformBoundsRow::kColumns>& uniform_bounds_columns() {
  static const std::array<const char*, UniformBoundsRow::kColumns> names{
      "sup_sqrt_rho_u", "sup_grad_rho_pow", "l2_visc", "l2_pressure_grad",
      "l2_hessian_theta", "l4_grad_half_theta", "sup_rho", "eps_inv_quarter"};
  return names;
}

inline UniformBoundsRow uniform_bounds_row(const Trajectory& traj, const Model& model) {
  if (traj.states.size() < 2) throw SamplingError("uniform_bounds_row: needs at least 2 samples");
  const auto& p = model.params;
  const double theta = std::abs(p.theta) > kThetaZeroTolerance ? p.theta : 1.0;
  UniformBoundsRow row;
  row.epsilon = p.epsilon;
  double i_visc = 0, i_pres = 0, i_hess = 0, i_l4 = 0;
  double prev[4] = {0, 0, 0, 0};
  double vb0 = 0.0;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto& s = traj.states[i];
    const auto& rho = s.rho;
    row.sup_sqrt_rho_u = std::max(row.sup_sqrt_rho_u, std::sqrt(integrate(rho * square(s.u))));
    row.sup_grad_rho_pow = std::max(row.sup_grad_rho_pow, l2_norm(deriv(pow(rho, p.alpha - 0.5), 1)));
    row.sup_rho = std::max(row.sup_rho, rho.max());
    const double eq = p.epsilon * pow(rho, -0.25).max();
    row.eps_inv_quarter = std::max(row.eps_inv_quarter, eq);
    const double vb = eq + rho.max();
    if (i == 0) vb0 = vb;
    row.vacuum_bound_ratio = std::max(row.vacuum_bound_ratio, vb / vb0);
    const double cur[4] = {integrate(pow(rho, p.alpha) * square(deriv(s.u, 1))),
                           integrate(square(deriv(pow(rho, 0.5 * (p.gamma + p.alpha - 1.0)), 1))),
                           integrate(square(deriv(pow(rho, theta), 2))),
                           integrate(square(square(deriv(pow(rho, 0.5 * theta), 1))))};
    if (i > 0) {
      const double h = s.t - traj.states[i - 1].t;
      i_visc += 0.5 * h * (prev[0] + cur[0]);
      i_pres += 0.5 * h * (prev[1] + cur[1]);
      i_hess += 0.5 * h * (prev[2] + cur[2]);
      i_l4 += 0.5 * h * (prev[3] + cur[3]);
    }
    std::copy(cur, cur + 4, prev);
  }
  row.l2_visc = std::sqrt(i_visc);
  row.l2_pressure_grad = std::sqrt(i_pres);
  row.l2_hessian_theta = std::sqrt(i_hess);
  row.l4_grad_half_theta = std::pow(i_l4, 0.25);
  return row;
}

struct UniformBoundsReport {
  std::vector<UniformBoundsRow> rows;
  /// Per column: max over rows divided by the first row's value.
  std::array<double, UniformBoundsRow::kColumns> growth{};
  /// Per column: true if the value grows monotonically along the sequence by more than 2x overall.
  std::array<bool, UniformBoundsRow::kColumns> flagged{};
  double max_vacuum_bound_ratio = 0.0;
};

inline UniformBoundsReport assemble_uniform_bounds(std::vector<UniformBoundsRow> rows) {
  if (rows.empty()) throw ConfigError("uniform bounds: no runs");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].epsilon < rows[i - 1].epsilon)) throw ConfigError("uniform bounds: epsilon list must be decreasing");
  }
  UniformBoundsReport rep;
  rep.rows = std::move(rows);
  const auto first = rep.rows.front().columns();
  for (std::size_t c = 0; c < UniformBoundsRow::kColumns; ++c) {
    double mx = first[c];
    bool monotone = true;
    double prev = first[c];
    for (const auto& r : rep.rows) {
      const double v = r.columns()[c];
      mx = std::max(mx, v);
      if (v < prev) monotone = false;
      prev = v;
    }
    rep.growth[c] = first[c] > 0.0 ? mx / first[c] : (mx > 0.0 ? INFINITY : 1.0);
    const double last = rep.rows.back().columns()[c];
    rep.flagged[c] = rep.rows.size() > 1 && monotone && last > 2.0 * first[c];
  }
  for (const auto& r : rep.rows) rep.max_vacuum_bound_ratio = std::max(rep.max_vacuum_bound_ratio, r.vacuum_bound_ratio);
  return rep;
}

}  // namespace nsk

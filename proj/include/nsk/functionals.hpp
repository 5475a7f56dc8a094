#pragma once

// Integral functionals on the torus: mass, energy, BD entropy, the cross
// dissipation J in three algebraically equivalent forms, Bernis pairs and the
// divergence-form decompositions of the Korteweg force.

#include <cmath>
#include <optional>
#include <utility>

#include "nsk/coefficients.hpp"
#include "nsk/error.hpp"
#include "nsk/grid.hpp"

namespace nsk {

/// |theta| below this is treated as the logarithmic branch.
inline constexpr double kThetaZeroTolerance = 1e-12;
/// J evaluations are flagged when the top 10% of modes carry more than this share.
inline constexpr double kResolutionTailLimit = 1e-8;

inline double mass(const PeriodicField& rho) { return integrate(rho); }

struct EnergyTerms {
  double kinetic = 0.0;
  double pressure = 0.0;
  double capillary = 0.0;
  double total() const noexcept { return kinetic + pressure + capillary; }
};

/// E = int rho u^2/2 + rho^gamma/(gamma-1) + k_eps(rho) |rho_x|^2 / 2.
inline EnergyTerms energy_terms(const PeriodicField& rho, const PeriodicField& u, const Model& model) {
  require_positive(rho, "energy");
  const double g = model.gamma();
  const auto rx = deriv(rho, 1);
  EnergyTerms e;
  e.kinetic = 0.5 * integrate(rho * square(u));
  e.pressure = integrate(pow(rho, g)) / (g - 1.0);
  e.capillary = 0.5 * integrate(k_eps(rho, model.law) * square(rx));
  return e;
}

inline double energy(const PeriodicField& rho, const PeriodicField& u, const Model& model) {
  return energy_terms(rho, u, model).total();
}

/// Effective velocity w = u + d/dx phi(rho).
inline PeriodicField effective_velocity(const PeriodicField& rho, const PeriodicField& u, const CoefficientLaw& law) {
  return u + grad_phi(rho, law);
}

struct BdEntropyTerms {
  double kinetic = 0.0;    // int rho w^2 / 2
  double pressure = 0.0;   // int rho^gamma / (gamma - 1)
  double capillary = 0.0;  // int k_eps |rho_x|^2 / 2
  /// int rho |d/dx phi|^2. Reported for comparison only: it is not conserved by the flow and
  /// is not part of total().
  double phi_gradient = 0.0;
  double total() const noexcept { return kinetic + pressure + capillary; }
};

inline BdEntropyTerms bd_entropy_terms(const PeriodicField& rho, const PeriodicField& u, const Model& model) {
  require_positive(rho, "bd_entropy");
  const double g = model.gamma();
  const auto rx = deriv(rho, 1);
  const auto dphi = phi_prime(rho, model.law) * rx;
  const auto w = u + dphi;
  BdEntropyTerms f;
  f.kinetic = 0.5 * integrate(rho * square(w));
  f.pressure = integrate(pow(rho, g)) / (g - 1.0);
  f.capillary = 0.5 * integrate(k_eps(rho, model.law) * square(rx));
  f.phi_gradient = integrate(rho * square(dphi));
  return f;
}

inline double bd_entropy(const PeriodicField& rho, const PeriodicField& u, const Model& model) {
  return bd_entropy_terms(rho, u, model).total();
}

/// int mu_eps(rho) |u_x|^2.
inline double viscous_dissipation(const PeriodicField& rho, const PeriodicField& u, const CoefficientLaw& law) {
  return integrate(mu(rho, law) * square(deriv(u, 1)));
}

/// gamma int mu_eps'(rho) rho^(gamma - offset) |rho_x|^2; the BD identity uses offset = 2.
inline double pressure_dissipation(const PeriodicField& rho, const Model& model, double exponent_offset = 2.0) {
  const double g = model.gamma();
  const auto w = mu_prime(rho, model.law) * pow(rho, g - exponent_offset);
  return g * integrate(w * square(deriv(rho, 1)));
}

/// J(rho) = int (mu(rho))_xx [ (k rho_x)_x - k'/2 |rho_x|^2 ] dx, evaluated directly.
inline double j_direct(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "j_direct");
  const auto rx = deriv(rho, 1);
  const auto bracket = deriv(k_eps(rho, law) * rx, 1) - 0.5 * k_eps_prime(rho, law) * square(rx);
  return integrate(deriv(mu(rho, law), 2) * bracket);
}

/// The three integrals of the theta form and the resulting J.
struct JThetaTerms {
  double quartic = 0.0;  // int |f_x|^4 / f^2      (theta = 0: int |(log rho)_x|^4)
  double hessian = 0.0;  // int |f_xx|^2          (theta = 0: int |(log rho)_xx|^2)
  double cross = 0.0;    // int f_xx |f_x|^2 / f  (theta = 0: unused)
  double value = 0.0;    // J
  /// Sum of the absolute contributions to J, a natural magnitude for sign tolerances.
  double scale = 0.0;
};

/// Closed form of J for pure power laws (eps = 0) in the variable f = rho^theta. At theta = 0
/// the theta -> 0 limit is used: J = alpha [ alpha (1 - alpha)/2 int |(log rho)_x|^4 + int |(log rho)_xx|^2 ].
inline JThetaTerms j_theta_terms(const PeriodicField& rho, double alpha, double beta) {
  require_positive(rho, "j_theta_form");
  const double s = alpha + beta + 1.0;
  const double theta = 0.5 * s;
  JThetaTerms t;
  if (std::abs(theta) <= kThetaZeroTolerance) {
    const auto [l1, l2] = derivs<2>(log(rho));
    t.quartic = integrate(square(square(l1)));
    t.hessian = integrate(square(l2));
    const double a = 0.5 * alpha * (1.0 - alpha) * t.quartic;
    t.value = alpha * (a + t.hessian);
    t.scale = alpha * (std::abs(a) + t.hessian);
    return t;
  }
  const auto f = pow(rho, theta);
  const auto [f1, f2] = derivs<2>(f);
  const auto f1sq = square(f1);
  t.quartic = integrate(square(f1sq) / square(f));
  t.hessian = integrate(square(f2));
  t.cross = integrate(f2 * f1sq / f);
  const double c_quartic = (alpha - beta - 1.0) * (1.0 - alpha) / (s * s);
  const double c_cross = -beta / s;
  const double pre = alpha / (theta * theta);
  t.value = pre * (c_quartic * t.quartic + t.hessian + c_cross * t.cross);
  t.scale = pre * (std::abs(c_quartic * t.quartic) + t.hessian + std::abs(c_cross * t.cross));
  return t;
}

inline double j_theta_form(const PeriodicField& rho, const CoefficientLaw& law) {
  if (!law.power_law()) throw UnsupportedError("j_theta_form: only defined for the pure power law (epsilon = 0)");
  return j_theta_terms(rho, law.alpha(), law.beta()).value;
}

inline double j_theta_form(const PeriodicField& rho, const ExponentParams& p) {
  if (p.epsilon != 0.0) throw UnsupportedError("j_theta_form: only defined for the pure power law (epsilon = 0)");
  return j_theta_terms(rho, p.alpha, p.beta).value;
}

/// The two integrals of the general-mu form of J for k = scale * rho^delta * mu'^2.
struct JGeneralTerms {
  double hessian = 0.0;  // int rho^delta mu' |mu_xx|^2
  double quartic = 0.0;  // int rho^(delta-2) |mu_x|^4 / mu'
  double value = 0.0;
  double scale = 0.0;
};

inline JGeneralTerms j_general_terms(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "j_general_form");
  const double d = law.delta();
  const auto m = mu(rho, law);
  const auto mp = mu_prime(rho, law);
  const auto [m1, m2] = derivs<2>(m);
  JGeneralTerms t;
  t.hessian = integrate(pow(rho, d) * mp * square(m2));
  t.quartic = integrate(pow(rho, d - 2.0) * square(square(m1)) / mp);
  const double c = d * (d - 1.0) / 6.0;
  t.value = law.k_scale() * (t.hessian - c * t.quartic);
  t.scale = law.k_scale() * (t.hessian + std::abs(c) * t.quartic);
  return t;
}

inline double j_general_form(const PeriodicField& rho, const CoefficientLaw& law) {
  return j_general_terms(rho, law).value;
}

struct InequalityPair {
  double lhs = 0.0;
  double rhs = 0.0;
  /// lhs / rhs, or 0 when both sides vanish.
  double ratio() const noexcept { return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0); }
};

/// ((1/9) int |(rho^theta)_x|^4 / rho^(2 theta), int |(rho^theta)_xx|^2).
inline InequalityPair bernis_pair(const PeriodicField& rho, double theta) {
  if (theta == 0.0) throw UnsupportedError("bernis_pair: no estimate for theta = 0");
  require_positive(rho, "bernis_pair");
  const auto f = pow(rho, theta);
  const auto [f1, f2] = derivs<2>(f);
  return {integrate(square(square(f1)) / square(f)) / 9.0, integrate(square(f2))};
}

/// ((delta-1)^2/9 int rho^(delta-2) |mu_x|^4 / mu', int rho^delta mu' |mu_xx|^2).
inline InequalityPair generalized_bernis_pair(const PeriodicField& rho, const CoefficientLaw& law) {
  const auto t = j_general_terms(rho, law);
  const double d = law.delta();
  return {(d - 1.0) * (d - 1.0) / 9.0 * t.quartic, t.hessian};
}

/// (int f_xx |f_x|^2 / f, (1/3) int |f_x|^4 / f^2) for f = rho^theta; equal by integration by parts.
inline std::pair<double, double> integration_by_parts_pair(const PeriodicField& rho, double theta) {
  require_positive(rho, "integration_by_parts_pair");
  const auto f = pow(rho, theta);
  const auto [f1, f2] = derivs<2>(f);
  const auto f1sq = square(f1);
  return {integrate(f2 * f1sq / f), integrate(square(f1sq) / square(f)) / 3.0};
}

/// (int rho^delta mu'^3 (|rho_xx|^2 + |rho_x|^4/rho^2), J) for -2 < delta < 1.
inline InequalityPair gbd_bound_pair(const PeriodicField& rho, const CoefficientLaw& law) {
  const double d = law.delta();
  if (!(d > -2.0 && d < 1.0)) {
    throw UnsupportedError("gbd_bound_pair: requires -2 < delta < 1 (got delta = " + std::to_string(d) + ")");
  }
  require_positive(rho, "gbd_bound_pair");
  const auto [r1, r2] = derivs<2>(rho);
  const auto weight = pow(rho, d) * pow(mu_prime(rho, law), 3.0);
  const double lhs = integrate(weight * (square(r2) + square(square(r1)) / square(rho)));
  return {lhs, j_general_form(rho, law)};
}

/// d/dx K = rho d/dx( (k rho_x)_x - k'/2 |rho_x|^2 ), dealiased. At eps = 0 the law gives k = rho^beta.
inline PeriodicField korteweg_force(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "korteweg_force");
  const auto rx = deriv(rho, 1);
  const auto inner = deriv(k_eps(rho, law) * rx, 1) - 0.5 * k_eps_prime(rho, law) * square(rx);
  return dealias(rho * deriv(inner, 1));
}

/// Constants of the two divergence-form decompositions of d/dx K for k = rho^beta:
///   d/dx K = kbar1 (rho^m (rho^m)_x)_xx + kbar2 (|(rho^m)_x|^2)_x,                m = beta/2 + 1
///   d/dx K = k1 (rho^(beta+2-theta) (rho^theta)_x)_xx + k2 (rho^(beta+2-theta) |(rho^(theta/2))_x|^2)_x
/// obtained by expanding both sides in rho_x, rho_xx, rho_xxx and matching coefficients:
///   kbar1 = 2/(beta+2), kbar2 = -2(beta+3)/(beta+2)^2, k1 = 1/theta, k2 = -2(beta+3)/theta^2.
struct KortewegConstants {
  double kbar1 = 0.0;
  double kbar2 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double beta = 0.0;
  double theta = 0.0;
};

inline KortewegConstants korteweg_weak_constants(double alpha, double beta) {
  const double theta = 0.5 * (alpha + beta + 1.0);
  if (std::abs(beta + 2.0) <= kThetaZeroTolerance) {
    throw UnsupportedError("korteweg_weak_constants: beta = -2 has no (beta/2 + 1) decomposition");
  }
  if (std::abs(theta) <= kThetaZeroTolerance) {
    throw UnsupportedError("korteweg_weak_constants: theta = 0 has no theta decomposition");
  }
  const double b2 = beta + 2.0;
  return {2.0 / b2, -2.0 * (beta + 3.0) / (b2 * b2), 1.0 / theta, -2.0 * (beta + 3.0) / (theta * theta), beta, theta};
}

inline KortewegConstants korteweg_weak_constants(const ExponentParams& p) {
  return korteweg_weak_constants(p.alpha, p.beta);
}

/// Right-hand side of the (beta/2 + 1) decomposition, dealiased.
inline PeriodicField korteweg_divergence_bar(const PeriodicField& rho, const KortewegConstants& c) {
  require_positive(rho, "korteweg_divergence_bar");
  const auto g = pow(rho, 0.5 * c.beta + 1.0);
  const auto g1 = deriv(g, 1);
  return dealias(c.kbar1 * deriv(g * g1, 2) + c.kbar2 * deriv(square(g1), 1));
}

/// Right-hand side of the theta decomposition, dealiased.
inline PeriodicField korteweg_divergence_theta(const PeriodicField& rho, const KortewegConstants& c) {
  require_positive(rho, "korteweg_divergence_theta");
  const auto weight = pow(rho, c.beta + 2.0 - c.theta);
  const auto f1 = deriv(pow(rho, c.theta), 1);
  const auto h1 = deriv(pow(rho, 0.5 * c.theta), 1);
  return dealias(c.k1 * deriv(weight * f1, 2) + c.k2 * deriv(weight * square(h1), 1));
}

/// ||a - b||_2 / ||a||_2 (absolute when a vanishes).
inline double relative_l2_difference(const PeriodicField& a, const PeriodicField& b) {
  const double diff = l2_norm(a - b);
  const double ref = l2_norm(a);
  return ref > 0.0 ? diff / ref : diff;
}

/// Fluxes of the weak Korteweg term: -int K psi_x = int second_order psi_xx + first_order psi_x.
struct KortewegWeakFluxes {
  PeriodicField second_order;
  PeriodicField first_order;
};

/// Pure power law through the theta constants: second = k1 rho^(beta+2-theta) (rho^theta)_x,
/// first = -k2 rho^(beta+2-theta) |(rho^(theta/2))_x|^2.
inline KortewegWeakFluxes korteweg_weak_fluxes(const PeriodicField& rho, const KortewegConstants& c) {
  require_positive(rho, "korteweg_weak_fluxes");
  const auto weight = pow(rho, c.beta + 2.0 - c.theta);
  return {c.k1 * weight * deriv(pow(rho, c.theta), 1),
          -c.k2 * weight * square(deriv(pow(rho, 0.5 * c.theta), 1))};
}

/// Same fluxes for a general law: K = (rho k rho_x)_x - (3k + rho k')/2 |rho_x|^2.
inline KortewegWeakFluxes korteweg_weak_fluxes(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "korteweg_weak_fluxes");
  const auto rx = deriv(rho, 1);
  const auto k = k_eps(rho, law);
  const auto kp = k_eps_prime(rho, law);
  return {rho * k * rx, 0.5 * (3.0 * k + rho * kp) * square(rx)};
}

/// All functionals of one (rho, u) pair.
struct FunctionalReport {
  double mass = 0.0;
  double energy = 0.0;
  double bd_entropy = 0.0;
  double j_direct = 0.0;
  std::optional<double> j_theta;  // only for eps = 0
  double j_general = 0.0;
  double visc_dissipation = 0.0;
  double pressure_dissipation = 0.0;
  double bernis_lhs = 0.0;
  double bernis_rhs = 0.0;
  double modal_tail = 0.0;
  bool resolution_warning = false;
};

inline FunctionalReport evaluate_functionals(const PeriodicField& rho, const PeriodicField& u, const Model& model) {
  FunctionalReport r;
  r.mass = mass(rho);
  r.energy = energy(rho, u, model);
  r.bd_entropy = bd_entropy(rho, u, model);
  r.j_direct = j_direct(rho, model.law);
  if (model.law.power_law()) r.j_theta = j_theta_form(rho, model.law);
  r.j_general = j_general_form(rho, model.law);
  r.visc_dissipation = viscous_dissipation(rho, u, model.law);
  r.pressure_dissipation = pressure_dissipation(rho, model);
  const double theta = std::abs(model.params.theta) > kThetaZeroTolerance ? model.params.theta : 1.0;
  const auto b = bernis_pair(rho, theta);
  r.bernis_lhs = b.lhs;
  r.bernis_rhs = b.rhs;
  r.modal_tail = spectral::modal_tail_fraction(rho);
  r.resolution_warning = r.modal_tail >= kResolutionTailLimit;
  return r;
}

}  // namespace nsk

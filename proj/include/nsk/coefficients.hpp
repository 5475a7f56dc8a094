#pragma once

// Exponent bundle and the regularized coefficient laws
//   mu_eps(rho) = rho^alpha + eps * rho^(1/4)
//   k_eps(rho)  = rho^delta * mu_eps'(rho)^2 / alpha^2,   delta = beta - 2 alpha + 2.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "nsk/error.hpp"
#include "nsk/grid.hpp"

namespace nsk {

struct ExponentParams {
  double alpha = 1.0;
  double beta = -1.0;
  double gamma = 2.0;
  double epsilon = 0.0;
  double delta = -1.0;  // beta - 2 alpha + 2
  double theta = 0.5;   // (alpha + beta + 1) / 2
};

/// Fills delta and theta; rejects exponents outside alpha > 1/2, gamma > 1, 2 gamma > alpha, eps >= 0.
inline ExponentParams derive_exponents(double alpha, double beta, double gamma, double epsilon) {
  std::vector<std::string> failed;
  if (!(alpha > 0.5)) failed.emplace_back("requires alpha > 1/2 (α>1/2)");
  if (!(gamma > 1.0)) failed.emplace_back("requires gamma > 1");
  if (!(2.0 * gamma > alpha)) failed.emplace_back("requires 2·gamma > alpha");
  if (!(epsilon >= 0.0)) failed.emplace_back("requires epsilon >= 0");
  if (!std::isfinite(beta)) failed.emplace_back("requires finite beta");
  if (!failed.empty()) {
    std::ostringstream msg;
    msg << "invalid exponents (alpha=" << alpha << ", beta=" << beta << ", gamma=" << gamma
        << ", epsilon=" << epsilon << "):";
    for (const auto& f : failed) msg << ' ' << f << ';';
    throw ConfigError(msg.str());
  }
  return ExponentParams{alpha, beta, gamma, epsilon, beta - 2.0 * alpha + 2.0, 0.5 * (alpha + beta + 1.0)};
}

/// Viscosity/capillarity pair mu = rho^alpha + eps rho^(1/4), k = scale * rho^delta * mu'^2.
///
/// Built from ExponentParams the scale is 1/alpha^2, which makes k = rho^beta at eps = 0.
/// `general` exposes the wider family used for the delta-parametrized coercivity results,
/// where alpha only needs to be positive.
class CoefficientLaw {
 public:
  static constexpr double kRegularizationExponent = 0.25;

  explicit CoefficientLaw(const ExponentParams& p)
      : alpha_(p.alpha), delta_(p.delta), epsilon_(p.epsilon), k_scale_(1.0 / (p.alpha * p.alpha)), beta_(p.beta) {}

  static CoefficientLaw general(double alpha, double delta, double epsilon, double k_scale = 1.0) {
    if (!(alpha > 0.0)) throw ConfigError("coefficient law: requires alpha > 0");
    if (!(epsilon >= 0.0)) throw ConfigError("coefficient law: requires epsilon >= 0");
    if (!(k_scale > 0.0)) throw ConfigError("coefficient law: requires positive capillarity scale");
    return CoefficientLaw(alpha, delta, epsilon, k_scale);
  }

  double alpha() const noexcept { return alpha_; }
  double delta() const noexcept { return delta_; }
  double epsilon() const noexcept { return epsilon_; }
  double k_scale() const noexcept { return k_scale_; }
  /// Capillarity exponent of the eps = 0 law: k = k_scale * alpha^2 * rho^beta.
  double beta() const noexcept { return beta_; }
  double theta() const noexcept { return 0.5 * (alpha_ + beta_ + 1.0); }
  bool power_law() const noexcept { return epsilon_ == 0.0; }

  double mu(double r) const { return std::pow(r, alpha_) + epsilon_ * std::pow(r, kRegularizationExponent); }
  double mu_prime(double r) const {
    return alpha_ * std::pow(r, alpha_ - 1.0) + epsilon_ * kRegularizationExponent * std::pow(r, -0.75);
  }
  double mu_double_prime(double r) const {
    return alpha_ * (alpha_ - 1.0) * std::pow(r, alpha_ - 2.0) +
           epsilon_ * kRegularizationExponent * (-0.75) * std::pow(r, -1.75);
  }
  double k(double r) const {
    const double mp = mu_prime(r);
    return k_scale_ * std::pow(r, delta_) * mp * mp;
  }
  double k_prime(double r) const {
    const double mp = mu_prime(r);
    const double rd = std::pow(r, delta_);
    return k_scale_ * (delta_ * rd / r * mp * mp + 2.0 * rd * mp * mu_double_prime(r));
  }
  /// phi' with rho phi'(rho) = mu'(rho).
  double phi_prime(double r) const { return mu_prime(r) / r; }
  /// Constant C in rho |mu''| <= C mu'.
  double regularity_constant() const { return std::max(std::abs(alpha_ - 1.0), 0.75); }

 private:
  CoefficientLaw(double alpha, double delta, double epsilon, double k_scale)
      : alpha_(alpha), delta_(delta), epsilon_(epsilon), k_scale_(k_scale), beta_(delta + 2.0 * alpha - 2.0) {}

  double alpha_;
  double delta_;
  double epsilon_;
  double k_scale_;
  double beta_;
};

inline void require_positive(const PeriodicField& rho, const char* where) {
  const double m = rho.min();
  if (!(m > 0.0)) throw PositivityError(where, m);
}

inline PeriodicField mu(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "mu");
  return rho.map([&](double r) { return law.mu(r); });
}
inline PeriodicField mu_prime(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "mu_prime");
  return rho.map([&](double r) { return law.mu_prime(r); });
}
inline PeriodicField mu_double_prime(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "mu_double_prime");
  return rho.map([&](double r) { return law.mu_double_prime(r); });
}
inline PeriodicField k_eps(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "k_eps");
  return rho.map([&](double r) { return law.k(r); });
}
inline PeriodicField k_eps_prime(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "k_eps_prime");
  return rho.map([&](double r) { return law.k_prime(r); });
}
inline PeriodicField phi_prime(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "phi_prime");
  return rho.map([&](double r) { return law.phi_prime(r); });
}

/// d/dx phi(rho) = phi'(rho) d/dx rho; phi itself is never formed.
inline PeriodicField grad_phi(const PeriodicField& rho, const CoefficientLaw& law) {
  return phi_prime(rho, law) * deriv(rho, 1);
}

/// A = sqrt(k(rho)/rho) d/dx rho.
inline PeriodicField a_field(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "a_field");
  const auto weight = rho.map([&](double r) { return std::sqrt(law.k(r) / r); });
  return weight * deriv(rho, 1);
}

/// mu / rho, the velocity diffusivity.
inline PeriodicField viscous_diffusivity(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "viscous_diffusivity");
  return rho.map([&](double r) { return law.mu(r) / r; });
}

/// sqrt(rho k), the capillary (dispersive) diffusivity.
inline PeriodicField capillary_diffusivity(const PeriodicField& rho, const CoefficientLaw& law) {
  require_positive(rho, "capillary_diffusivity");
  return rho.map([&](double r) { return std::sqrt(r * law.k(r)); });
}

/// Exponents together with the coefficient law they induce.
struct Model {
  ExponentParams params;
  CoefficientLaw law;

  explicit Model(const ExponentParams& p) : params(p), law(p) {}
  double gamma() const noexcept { return params.gamma; }
};

}  // namespace nsk

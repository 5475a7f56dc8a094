#include <catch_amalgamated.hpp>

#include <random>
#include <string>

#include "nsk/coefficients.hpp"
#include "support.hpp"

using namespace nsk;
using test::rel_err;

namespace {

ExponentParams exps(double a, double b, double eps = 0.0, double g = 2.0) { return derive_exponents(a, b, g, eps); }

// adaptive Simpson for the antiderivative oracle
template <class F>
double simpson(F f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <class F>
double quad(F f, double a, double b, double tol = 1e-14) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), tol, 40);
}

}  // namespace

TEST_CASE("derive_exponents fills delta and theta") {
  auto q = exps(1, -1);
  CHECK(q.delta == -1.0);
  CHECK(q.theta == 0.5);
  auto p = exps(2, 1);
  CHECK(p.delta == -1.0);
  CHECK(p.theta == 2.0);
  CHECK(exps(1, -2).theta == 0.0);
}

TEST_CASE("derive_exponents names the failed inequality") {
  auto message = [](double a, double b, double g, double e) {
    try {
      derive_exponents(a, b, g, e);
    } catch (const ConfigError& err) {
      return std::string(err.what());
    }
    return std::string();
  };
  CHECK(message(0.4, -1, 2, 0).find("α>1/2") != std::string::npos);
  CHECK(message(1, -1, 1.0, 0).find("gamma > 1") != std::string::npos);
  CHECK(message(3, 1, 1.2, 0).find("2·gamma > alpha") != std::string::npos);
  CHECK(message(1, -1, 2, -0.1).find("epsilon >= 0") != std::string::npos);
}

TEST_CASE("mu, mu', mu'' on constants") {
  const auto g = make_grid(16);
  for (double a : {0.6, 1.0, 2.0, 5.0}) {
    for (double e : {0.0, 0.1}) {
      CoefficientLaw law(exps(a, -1, e, 3.0));
      CHECK(rel_err(mu(PeriodicField(g, 1.0), law)[3], 1.0 + e) <= 1e-15);
    }
  }
  CoefficientLaw lin(exps(1, -1));
  PeriodicField four(g, 4.0);
  CHECK(mu(four, lin)[0] == 4.0);
  CHECK(mu_prime(four, lin)[0] == 1.0);
  CHECK(mu_double_prime(four, lin)[0] == 0.0);

  // high precision reference
  CoefficientLaw law(exps(2, 1, 0.1));
  CHECK(rel_err(mu(PeriodicField(g, 2.0), law)[5], 4.11892071150027210667) <= 1e-15);
}

TEST_CASE("k_eps reduces to rho^beta without regularization") {
  std::mt19937_64 rng(3);
  const auto g = make_grid(64);
  const auto rho = test::random_band_limited(g, rng, 6, 0.0).map([](double v) { return 0.3 + std::exp(v); });
  for (auto [a, b] : {std::pair{1.0, -1.0}, {2.0, 1.0}, {0.75, -1.25}, {3.0, 3.5}, {1.0, -2.0}, {0.6, 4.0}}) {
    CoefficientLaw law(exps(a, b));
    CHECK(test::max_rel_diff(k_eps(rho, law), pow(rho, b)) <= 1e-12);
  }
  CHECK(k_eps(PeriodicField(g, 1.0), CoefficientLaw(exps(2, 1)))[0] == Catch::Approx(1.0).epsilon(1e-15));
  CoefficientLaw reg(exps(1, -1, 0.1));
  CHECK(rel_err(k_eps(PeriodicField(g, 2.0), reg)[0], 0.514975574372094411384656) <= 1e-15);
}

TEST_CASE("k_prime matches a centered difference of k") {
  for (auto [a, b, e] : {std::tuple{1.0, -1.0, 0.1}, {2.0, 1.0, 0.0}, {0.75, 0.5, 0.05}}) {
    CoefficientLaw law(exps(a, b, e));
    for (double r : {0.3, 1.0, 2.7}) {
      const double h = 1e-5 * r;
      const double fd = (law.k(r + h) - law.k(r - h)) / (2 * h);
      CHECK(rel_err(law.k_prime(r), fd) <= 1e-8);
      const double fd2 = (law.mu_prime(r + h) - law.mu_prime(r - h)) / (2 * h);
      CHECK(std::abs(law.mu_double_prime(r) - fd2) <= 1e-8 * std::max(1.0, std::abs(fd2)));
    }
  }
}

TEST_CASE("grad_phi") {
  const auto g = make_grid(128);
  const auto rho = test::sine_profile(g, 2.0, 1.0);
  const auto rx = deriv(rho, 1);
  for (double a : {0.6, 1.0, 2.0, 3.5}) {
    CoefficientLaw law(exps(a, 0.0));
    CHECK(test::max_rel_diff(grad_phi(rho, law), a * pow(rho, a - 2.0) * rx) <= 1e-10);
  }
  CHECK(grad_phi(PeriodicField(g, 1.7), CoefficientLaw(exps(1, -1, 0.1))).max_abs() == 0.0);
  // alpha = 1: d/dx log rho
  CHECK(test::max_rel_diff(grad_phi(rho, CoefficientLaw(exps(1, -1))), deriv(log(rho), 1)) <= 1e-10);
}

TEST_CASE("grad_phi agrees with a numerically integrated antiderivative") {
  const auto g = make_grid(256);
  const auto rho = test::sine_profile(g, 2.0, 1.2);
  for (auto [a, e] : {std::pair{1.0, 0.1}, {0.75, 0.01}, {2.0, 0.3}}) {
    CoefficientLaw law(exps(a, -1, e));
    const auto phi = rho.map([&](double r) { return quad([&](double s) { return law.phi_prime(s); }, 1.0, r); });
    CHECK(test::max_rel_diff(deriv(phi, 1), grad_phi(rho, law)) <= 1e-8);
  }
}

TEST_CASE("a_field") {
  const auto g = make_grid(128);
  const auto rho = test::sine_profile(g, 2.0, 0.8, 2);
  CHECK(a_field(PeriodicField(g, 3.0), CoefficientLaw(exps(1, -1))).max_abs() == 0.0);
  CHECK(test::max_rel_diff(a_field(rho, CoefficientLaw(exps(1, -1))), deriv(log(rho), 1)) <= 1e-10);
  for (auto [a, b] : {std::pair{2.0, 1.0}, {0.75, -1.25}, {1.0, 0.5}}) {
    const auto want = (2.0 / (b + 1.0)) * deriv(pow(rho, 0.5 * (b + 1.0)), 1);
    CHECK(test::max_rel_diff(a_field(rho, CoefficientLaw(exps(a, b))), want) <= 1e-10);
  }
}

TEST_CASE("nonpositive density is rejected with its minimum") {
  const auto g = make_grid(16);
  auto rho = test::sine_profile(g, 0.5, 1.0);
  CoefficientLaw law(exps(1, -1));
  try {
    mu(rho, law);
    FAIL("expected PositivityError");
  } catch (const PositivityError& e) {
    CHECK(e.min_value() == Catch::Approx(-0.5));
  }
  CHECK_THROWS_AS(k_eps(rho, law), PositivityError);
  CHECK_THROWS_AS(grad_phi(rho, law), PositivityError);
  CHECK_THROWS_AS(a_field(rho, law), PositivityError);
}

TEST_CASE("mu' > 0 and rho |mu''| <= C mu' over many decades") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> logr(std::log(1e-6), std::log(1e3));
  for (double a : {0.6, 1.0, 2.0, 5.0}) {
    for (double e : {0.0, 0.1}) {
      CoefficientLaw law(exps(a, 0.0, e, 3.0));
      const double c = law.regularity_constant();
      for (int i = 0; i < 10000; ++i) {
        const double r = std::exp(logr(rng));
        const double mp = law.mu_prime(r);
        REQUIRE(mp > 0.0);
        REQUIRE(r * std::abs(law.mu_double_prime(r)) <= c * mp * (1 + 1e-14));
      }
    }
  }
}

TEST_CASE("regularized coefficients converge at rate eps") {
  const auto g = make_grid(64);
  const auto rho = test::sine_profile(g, 1.5, 0.7);
  CoefficientLaw base(exps(1.5, 0.0));
  double prev[3] = {0, 0, 0};
  for (double e : {1e-2, 1e-3, 1e-4}) {
    CoefficientLaw law(exps(1.5, 0.0, e));
    const double d[3] = {(mu(rho, law) - mu(rho, base)).max_abs(), (k_eps(rho, law) - k_eps(rho, base)).max_abs(),
                         (grad_phi(rho, law) - grad_phi(rho, base)).max_abs()};
    for (int i = 0; i < 3; ++i) {
      if (prev[i] > 0) CHECK(prev[i] / d[i] == Catch::Approx(10.0).epsilon(0.02));
      prev[i] = d[i];
    }
  }
}

#include <catch_amalgamated.hpp>

#include <random>

#include "nsk/coercivity.hpp"
#include "support.hpp"

using namespace nsk;

TEST_CASE("coefficient_1d closed values") {
  CHECK(std::abs(coefficient_1d(1, -1) - 4.0 / 9.0) <= 1e-14);
  CHECK(std::abs(coefficient_1d(2, 0)) <= 1e-14);
  CHECK(std::abs(coefficient_1d(2, 4) + 8.0 / 441.0) <= 1e-14);
  CHECK_THROWS_AS(coefficient_1d(1, -2), UnsupportedError);
}

TEST_CASE("coefficient_1d vanishes on both boundary lines") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ad(0.51, 6.0);
  for (int i = 0; i < 50; ++i) {
    const double a = ad(rng);
    CHECK(std::abs(coefficient_1d(a, 2 * a - 1)) <= 1e-12);
    if (std::abs(3 * a - 3) > 1e-6) CHECK(std::abs(coefficient_1d(a, 2 * a - 4)) <= 1e-12);
  }
}

TEST_CASE("coefficient sign matches the analytic verdict") {
  for (double a = 0.55; a < 4; a += 0.123) {
    for (double b = -4; b < 7; b += 0.171) {
      if (is_theta_zero(a, b)) continue;
      const auto v = admissible_power(a, b);
      const double c = coefficient_1d(a, b);
      if (v.analytic == Analytic::admissible) CHECK(c > 0);
      if (v.analytic == Analytic::inadmissible) CHECK(c < 0);
    }
  }
}

TEST_CASE("admissible_power") {
  CHECK(admissible_power(1, -1).analytic == Analytic::admissible);
  CHECK(admissible_power(2, 4).analytic == Analytic::inadmissible);
  CHECK(admissible_power(1, 1).analytic == Analytic::boundary);
  CHECK(admissible_power(2, 0).analytic == Analytic::boundary);
  // theta = 0: admissible iff alpha <= 1
  CHECK(admissible_power(0.75, -1.75).analytic == Analytic::admissible);
  CHECK(admissible_power(2, -3).analytic == Analytic::inadmissible);
  CHECK(admissible_power(1, -2).analytic == Analytic::boundary);
}

TEST_CASE("admissible_delta") {
  CHECK(admissible_delta(-1).analytic == Analytic::admissible);
  CHECK(admissible_delta(1).analytic == Analytic::boundary);
  CHECK(admissible_delta(-2).analytic == Analytic::boundary);
  CHECK(admissible_delta(1.5).analytic == Analytic::inadmissible);
  CHECK(admissible_delta(1.5).coefficient_value == Catch::Approx(1.0 / 36 - 1.0 / 8));
  CHECK(admissible_delta(-2.5).analytic == Analytic::inadmissible);
}

TEST_CASE("delta and (alpha, beta) verdicts agree for power laws") {
  for (double a = 0.6; a < 4; a += 0.2) {
    for (double b = -4; b < 7; b += 0.25) {
      const auto p = admissible_power(a, b);
      const auto d = admissible_delta(b - 2 * a + 2);
      CHECK((p.analytic == Analytic::inadmissible) == (d.analytic == Analytic::inadmissible));
    }
  }
}

TEST_CASE("theorem_main_range") {
  CHECK(theorem_main_range(1, -1));
  CHECK_FALSE(theorem_main_range(0.7, -1.9));
  CHECK(theorem_main_range(3, 3.5));
  CHECK_FALSE(theorem_main_range(1, 1));    // upper line excluded
  CHECK(theorem_main_range(1, -1 + 1e-9));
  CHECK_FALSE(theorem_main_range(0.5, -1.5));
}

TEST_CASE("random positive profiles respect the floor") {
  std::mt19937_64 rng(12);
  const auto g = make_grid(256);
  for (int i = 0; i < 200; ++i) {
    const auto rho = random_positive_profile(g, rng);
    REQUIRE(rho.min() >= 0.2 - 1e-12);
    REQUIRE(spectral::modal_tail_fraction(rho) < kResolutionTailLimit);
  }
}

TEST_CASE("admissibility map flips across the upper line") {
  MapOptions opt;
  opt.alpha_min = 1.0;
  opt.alpha_max = 2.0;
  opt.beta_min = 0.5;
  opt.beta_max = 3.5;
  opt.resolution = 3;
  opt.samples_per_cell = 20;
  opt.search = false;
  const auto cells = admissibility_map(opt);
  REQUIRE(cells.size() == 9);
  for (const auto& c : cells) {
    const bool below = c.beta < 2 * c.alpha - 1 - 1e-12;
    const bool above = c.beta > 2 * c.alpha - 1 + 1e-12;
    if (below) CHECK(c.analytic == Analytic::admissible);
    if (above) CHECK(c.analytic == Analytic::inadmissible);
    if (c.analytic != Analytic::inadmissible) CHECK(c.sampled_min_J >= -1e-10);
  }
  CHECK(cells[4].analytic == Analytic::boundary);  // (1.5, 2)
}

TEST_CASE("map is independent of the job count") {
  MapOptions opt;
  opt.resolution = 4;
  opt.samples_per_cell = 5;
  opt.search = false;
  opt.seed = 77;
  const auto one = admissibility_map(opt);
  opt.jobs = 3;
  const auto three = admissibility_map(opt);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].sampled_min_J == three[i].sampled_min_J);
}

TEST_CASE("counterexample search") {
  CHECK_THROWS_AS(counterexample_search(1, -1), ConfigError);
  for (auto [a, b] : {std::pair{0.6, -3.5}, {1.0, 3.0}, {2.0, -3.0}}) {
    SearchOptions opt;
    opt.seed = 5;
    const auto found = counterexample_search(a, b, opt);
    REQUIRE(found.has_value());
    CHECK(found->j_value < 0);
    // independent re-evaluation on a finer grid with the direct form
    const auto law = CoefficientLaw::general(a, b - 2 * a + 2, 0.0, 1.0 / (a * a));
    const auto rho = found->evaluate(make_grid(2 * found->n));
    CHECK(j_direct(rho, law) < 0);
    CHECK(j_theta_terms(rho, a, b).value < 0);
    CHECK(found->j_direct_refined == j_direct(rho, law));
  }
}

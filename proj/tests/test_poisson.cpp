#include <random>

#include "doctest.h"
#include "hsflow/poisson.hpp"
#include "random_maps.hpp"

using namespace hsflow;

namespace {
const RationalDerivative kCardioid(-1.0, {2.0});
}

TEST_CASE("coefficients_A golden values") {
  const auto pd = coefficients_A(kCardioid, 1.0);
  REQUIRE(pd.A.size() == 1);
  CHECK(std::abs(pd.A[0] - (-2.0 / 3.0)) < 1e-15);
  CHECK(std::abs(pd.A_inf) == 0.0);
  CHECK(std::abs(pd.A0 - (-1.0 / 3.0)) < 1e-15);
  CHECK(pd.mu_total == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto disk = coefficients_A(RationalDerivative(2.0, {}), 3.0);
  CHECK(disk.A.empty());
  CHECK(std::abs(disk.A_inf - 0.75) < 1e-15);
  CHECK(std::abs(disk.A0 - 0.75) < 1e-15);
  CHECK(disk.mu_total == doctest::Approx(0.75));

  const RationalDerivative pair(1.0, {Complex(0, 2), Complex(0, -2)});
  const auto ps = coefficients_A(pair.normalized(), 1.0);
  CHECK(std::abs(ps.A[0] - std::conj(ps.A[1])) < 1e-15);

  CHECK_THROWS_AS(coefficients_A(RationalDerivative(-1.0, {2.0, 2.0 + 1e-9}).normalized(), 1.0),
                  Error);
}

TEST_CASE("P and P* golden values") {
  const auto pd = coefficients_A(kCardioid, 1.0);
  CHECK(std::abs(eval_P(pd, kCardioid, 0.0) - 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(eval_P(pd, kCardioid, 3.0) - (-5.0 / 3.0)) < 1e-15);
  CHECK(std::abs(eval_P_star(pd, kCardioid, 2.0) - 5.0 / 9.0) < 1e-15);
  CHECK(std::abs(eval_P_star(pd, kCardioid, 1e9) - 1.0 / 3.0) < 1e-8);
  CHECK_THROWS_AS(eval_P(pd, kCardioid, 2.0), Error);
  CHECK_THROWS_AS(eval_P_star(pd, kCardioid, 0.5), Error);
  const Complex sum = eval_P(pd, kCardioid, 3.0) + eval_P_star(pd, kCardioid, 3.0);
  CHECK(std::abs(sum - (-1.2)) < 1e-15);
  CHECK(check_reflection_identity(pd, kCardioid, 64) < 1e-14);

  const RationalDerivative disk(2.0, {});
  const auto dd = coefficients_A(disk, 1.0);
  CHECK(std::abs(eval_P(dd, disk, Complex(0.3, 0.1)) - 0.25) < 1e-15);
  CHECK(std::abs(eval_P_star(dd, disk, Complex(5, 1)) - 0.25) < 1e-15);
  CHECK(check_reflection_identity(dd, disk, 16) < 1e-15);
}

TEST_CASE("q for unit growth") {
  CHECK(q_for_unit_growth(RationalDerivative(1.5, {})) == doctest::Approx(2.25).epsilon(1e-12));
  const double q = q_for_unit_growth(kCardioid);
  CHECK(q == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(coefficients_A(kCardioid, q).mu_total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(q_for_unit_growth(RationalDerivative(-1.0, {0.5})), Error);
  CHECK_THROWS_AS(mu_total_trapezoid(kCardioid, 100), Error);
  // Huntingford t = 0 sits on the cusp; use a nearby interior state.
  const RationalDerivative h(0.6 * 1.1, {-1.1, -5.0 / 3.0});
  const double qh = q_for_unit_growth(h.normalized());
  CHECK(coefficients_A(h.normalized(), qh).mu_total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Poisson numerator route matches partial fractions") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rd = testing::random_map(rng);
    const auto pd = coefficients_A(rd, 1.3);
    const auto pn = poisson_numerator(rd.numerator(), rd.denominator(), 1.3);
    CHECK(std::abs(pn.P0() - pd.mu_total) < 1e-10 * pd.mu_total);
    for (double r : {0.4, 0.9}) {
      const Complex z = std::polar(r, 0.7 * trial);
      CHECK(std::abs(pn.P(z) - eval_P(pd, rd, z)) < 1e-9 * (1 + std::abs(eval_P(pd, rd, z))));
      const Complex zs = std::polar(1 / r, 0.3 * trial);
      CHECK(std::abs(pn.P_star(zs) - eval_P_star(pd, rd, zs)) <
            1e-9 * (1 + std::abs(eval_P_star(pd, rd, zs))));
    }
  }
}

TEST_CASE("identities on random maps") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    CAPTURE(trial);
    const auto rd = testing::random_map(rng);
    const auto pd = coefficients_A(rd, 1.0);
    CHECK(check_reflection_identity(pd, rd, 200) <= 1e-10);
    CHECK(std::abs(pd.P0.imag()) <= 1e-10);
    CHECK(std::abs(eval_P(pd, rd, 0.0) - pd.mu_total) <= 1e-10);
    CHECK(mu_total_trapezoid(rd) == doctest::Approx(pd.mu_total).epsilon(1e-8));
    for (Complex a : pd.A) CHECK(std::abs(a) > 0.0);
    for (const auto& p : rd.poles())
      CHECK(std::abs(eval_P_star(pd, rd, p.z) + eval_P(pd, rd, p.z)) <= 1e-10);
    for (int k = 0; k < 5; ++k) {
      const Complex z = std::polar(std::sqrt(u(rng)) * 0.999, 2 * kPi * u(rng));
      CHECK(eval_P(pd, rd, z).real() > 0.0);
    }
  }
}

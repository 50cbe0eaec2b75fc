#include "doctest.h"
#include "hsflow/gallery.hpp"
#include "hsflow/moments.hpp"
#include "hsflow/poisson.hpp"

using namespace hsflow;
using namespace hsflow::gallery;

TEST_CASE("Huntingford closed form") {
  const auto a = huntingford_coeffs(0.0);
  CHECK(std::abs(a.a(1) - 1.0) < 1e-15);
  CHECK(std::abs(a.a(2) - 0.8) < 1e-15);
  CHECK(std::abs(a.a(3) - 0.2) < 1e-15);
  auto w = huntingford_map(0.0).zeros();
  std::sort(w.begin(), w.end(), [](Complex x, Complex y) { return x.real() < y.real(); });
  CHECK(std::abs(w[0] + 5.0 / 3.0) < 1e-14);
  CHECK(std::abs(w[1] + 1.0) < 1e-14);

  const auto w0 = huntingford_map(huntingford_t0()).zeros();
  CHECK(std::abs(w0[0] - std::conj(w0[1])) < 1e-12);
  CHECK(std::abs(std::abs(w0[0]) - 1.0) < 1e-12);

  CHECK_THROWS_AS(huntingford_map(huntingford_t0() - 1e-6), Error);
  CHECK(leading_coeff(huntingford_map(0.3)) == doctest::Approx(std::exp(0.3)).epsilon(1e-13));
}

TEST_CASE("Huntingford q is the unit-growth rate") {
  for (double t : {-0.1, 0.1, 0.5, 1.5}) {
    const auto rd = huntingford_map(t).normalized();
    CHECK(huntingford_q(t) == doctest::Approx(q_for_unit_growth(rd)).epsilon(1e-10));
  }
}

TEST_CASE("off-center disk") {
  for (double t : {1.8, 2.5, 3.0, 5.0}) {
    const auto p = offcenter_params(t);
    CHECK(std::abs(offcenter_f(t, 1.0 / t) - 1.0) < 1e-10);
    const double res = p.b * p.b * (1.0 - 2.0 * t * t + p.a * t * t * t) * (p.a - t) /
                       (t * (1.0 - t * t) * (1.0 - t * t));
    CHECK(res == doctest::Approx(4.0).epsilon(1e-10));
    const auto w = offcenter_disk_map(t).zeros();
    CHECK(std::abs(w[0] + w[1] - 2.0 * t) < 1e-10);
    CHECK(std::abs(w[0] * w[1] - t * p.a) < 1e-10 * std::abs(t * p.a));
    CHECK(offcenter_q(t) > 0.0);
  }
  CHECK(std::abs(offcenter_params(2.0 + 1e-9).b) < 1e-8);
  const auto g2 = offcenter_disk_map(2.0);
  CHECK(g2.m() == 0);
  CHECK(std::abs(eval_f(g2, 0.5) - 1.0) < 1e-13);
  const auto lr = to_log_rational(g2);
  REQUIRE(lr.pole_coeffs.size() == 1);
  CHECK(std::abs(lr.pole_coeffs[0][0] + 6.0) < 1e-13);
  CHECK(std::abs(lr.residues[0]) < 1e-13);
  CHECK_THROWS_AS(offcenter_params(1.0), Error);
  CHECK_THROWS_AS(offcenter_params(0.5), Error);

  // q at the degenerate instant is the limit from both sides
  CHECK(offcenter_q(2.0) == 1.2);
  CHECK(offcenter_q(2.0 - 1e-5) == doctest::Approx(1.2).epsilon(1e-4));
  CHECK(offcenter_q(2.0 + 1e-5) == doctest::Approx(1.2).epsilon(1e-4));
}

TEST_CASE("boundary relation holds for the closed forms") {
  for (double t : {-0.1, 0.0, 0.4, 1.0}) CHECK(boundary_relation_residual("huntingford", t) <= 1e-7);
  for (double t : {1.8, 2.5, 3.0}) CHECK(boundary_relation_residual("offcenter", t) <= 1e-7);
}

TEST_CASE("two real roots fields") {
  const auto f = two_real_roots_fields(2.0, 3.0);
  CHECK(f.alpha == doctest::Approx(7.0 / 60.0).epsilon(1e-15));
  CHECK(f.beta == doctest::Approx(1.0 / 24.0).epsilon(1e-15));
  CHECK(f.product_rate_sign == 1);
  CHECK(two_real_roots_fields(1.5, 2.0).ratio_rate_sign == 0);
  // the ratio w2/w1 shrinks when the product exceeds 3
  const auto g = two_real_roots_fields(1.5, 2.5);
  CHECK(g.ratio_rate_sign == -1);
  CHECK(g.rate2 - g.rate1 == doctest::Approx(-128.0 / 385.0).epsilon(1e-12));
  CHECK(two_real_roots_fields(1.1, 2.0).ratio_rate_sign == 1);
  CHECK_THROWS_AS(two_real_roots_fields(3.0, 2.0), Error);
  CHECK_THROWS_AS(two_real_roots_fields(0.9, 2.0), Error);
}

TEST_CASE("two real roots fields agree with the general dynamics") {
  const double w1 = 1.7, w2 = 2.9;
  const auto rd = RationalDerivative(1.0, {w1, w2}).normalized();
  const auto d = rhs(rd, 1.0);
  const auto f = two_real_roots_fields(w1, w2);
  const double s = std::norm(rd.b());
  CHECK((d.omega_dot[0] / w1).real() * s == doctest::Approx(f.rate1).epsilon(1e-12));
  CHECK((d.omega_dot[1] / w2).real() * s == doctest::Approx(f.rate2).epsilon(1e-12));
}

TEST_CASE("cardioid reference") {
  const auto r = cardioid_reference(2.0, 1.0, 1.0);
  CHECK(r.A1 == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
  CHECK(r.A0 == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(r.log_rate == doctest::Approx(1.0).epsilon(1e-15));
  const auto r2 = cardioid_reference(2.0, 1.0, 2.0);
  CHECK(r2.log_rate == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cardioid_reference(1.0 + 1e-9, 1.0, 1.0).log_rate > 1e8);
}

TEST_CASE("entries") {
  CHECK(entries().size() == 3);
  CHECK(evaluate("huntingford", 0.0).taylor.order() == 3);
  CHECK_THROWS_AS(evaluate("nope", 0.0), Error);
}

#include <random>

#include "doctest.h"
#include "hsflow/dynamics.hpp"
#include "hsflow/gallery.hpp"
#include "hsflow/moments.hpp"
#include "random_maps.hpp"

using namespace hsflow;

namespace {
TaylorSeries series(std::vector<Complex> a) {
  TaylorSeries s;
  s.coeffs = std::move(a);
  return s;
}
}  // namespace

TEST_CASE("Huntingford moments at t = 0") {
  const auto a = series({1.0, 0.8, 0.2});
  CHECK(std::abs(moments_richardson(a, 1) - 32.0 / 25.0) < 1e-15);
  CHECK(std::abs(moments_richardson(a, 2) - 0.2) < 1e-15);
  CHECK(std::abs(moments_richardson(a, 0) - (1.0 + 2.0 * 0.64 + 3.0 * 0.04)) < 1e-15);
  CHECK(std::abs(moments_richardson(a, 3)) < 1e-15);
  CHECK(dirichlet_excess(a) == doctest::Approx(1.4).epsilon(1e-15));
}

TEST_CASE("Huntingford moments are independent of t") {
  for (double t : {gallery::huntingford_t0(), -0.05, 0.0, 0.7, 2.0}) {
    const auto a = gallery::huntingford_coeffs(t);
    CHECK(std::abs(moments_richardson(a, 1) - gallery::kHuntingfordM1) < 1e-12);
    CHECK(std::abs(moments_richardson(a, 2) - gallery::kHuntingfordM2) < 1e-12);
  }
}

TEST_CASE("last moment") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int m = 1; m <= 5; ++m) {
    std::vector<Complex> a{std::abs(n(rng)) + 0.5};
    for (int k = 1; k <= m; ++k) a.push_back({0.3 * n(rng), 0.3 * n(rng)});
    const auto s = series(a);
    CHECK(std::abs(moments_richardson(s, m) - std::pow(a[0], m + 1) * std::conj(a[m])) < 1e-12);
    CHECK(std::abs(moments_richardson(s, m + 1)) < 1e-14);
  }
}

TEST_CASE("contour and enumeration agree on polynomial maps") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 40; ++i) {
    const auto rd = testing::random_map(rng, 4, 0);
    const auto ts = taylor_coeffs(rd, rd.m() + 1);
    for (int k = 0; k <= rd.m(); ++k) {
      const Complex r = moments_richardson(ts, k);
      CHECK(std::abs(moments_contour(rd, k) - r) <= 1e-10 * (1.0 + std::abs(r)));
      CHECK(std::abs(moments_contour(ts, k) - r) <= 1e-10 * (1.0 + std::abs(r)));
    }
  }
}

TEST_CASE("rational maps: log-rational and series contour routes agree") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    RationalDerivative rd;
    do rd = testing::random_map(rng, 4, 2); while (rd.is_polynomial() || rd.m() < rd.n());
    const auto ls = long_series(rd);
    for (int k = 0; k <= 3; ++k) {
      const Complex a = moments_contour(rd, k);
      CHECK(std::abs(moments_contour(ls, k) - a) <= 1e-9 * (1.0 + std::abs(a)));
    }
    const auto mv = moment_vector(rd, 2, 0.0);
    const double a1 = leading_coeff(rd);
    CHECK(std::abs(mv.M[0].real() - a1 * a1 - mv.N0) <= 1e-9 * mv.M[0].real());
  }
}

TEST_CASE("series from numerator") {
  const RationalDerivative rd(6.0, {}, {{2.0, 2}});
  const auto ts = series_from_numerator(rd.numerator(), rd.poles(), 3);
  CHECK(std::abs(ts.a(1) - 1.5) < 1e-15);
  CHECK(std::abs(ts.a(2) - 0.75) < 1e-15);
  CHECK(std::abs(ts.a(3) - 0.375) < 1e-15);
}

TEST_CASE("disk mass") {
  const auto mv = moment_vector(RationalDerivative(1.5, {}), 0, 0.0);
  CHECK(mv.M[0].real() == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(mv.N0 == 0.0);
}

TEST_CASE("errors") {
  const auto a = series(std::vector<Complex>(40, 0.01));
  CHECK_THROWS_AS(moments_richardson(a, 6, 1000), Error);
  try {
    moments_richardson(a, 6, 1000);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TupleBlowup);
  }
  CHECK_THROWS_AS(moments_contour(RationalDerivative(-1.0, {2.0}), 1, 256), Error);
  CHECK_THROWS_AS(moments_contour(RationalDerivative(-1.0, {0.5}), 1), Error);
}

TEST_CASE("report flags violations") {
  Trajectory tr;
  for (int i = 0; i < 3; ++i) {
    Sample s;
    s.state.t = i;
    s.state.Q = 0.5 * i;
    s.taylor = series({std::sqrt(1.0 + i), 0.1});
    s.moments.M = {1.0 + i + 0.02, 0.1};
    s.moments.N0 = 0.02;
    tr.samples.push_back(s);
  }
  auto rep = trajectory_moment_report(tr);
  CHECK(rep.pass());
  tr.samples[2].moments.N0 = 0.03;
  tr.samples[2].moments.M[1] = 0.1 + 1e-6;
  rep = trajectory_moment_report(tr);
  CHECK_FALSE(rep.pass());
  int failed = 0;
  for (const auto& c : rep.checks) failed += !c.pass;
  CHECK(failed == 2);
}

TEST_CASE("moments of the disk centred at 1 with radius 2") {
  const RationalDerivative rd(6.0, {}, {{2.0, 2}});
  CHECK(std::abs(moments_contour(rd, 0) - 4.0) < 1e-12);
  CHECK(std::abs(moments_contour(rd, 1) - 4.0) < 1e-12);
  CHECK(std::abs(moments_contour(rd, 2) - 4.0) < 1e-12);
}

TEST_CASE("contour moments are stable under node refinement") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    RationalDerivative rd;
    do rd = testing::random_map(rng, 4, 2); while (rd.is_polynomial() || rd.m() < rd.n());
    for (int k = 0; k <= 2; ++k) {
      const Complex a = moments_contour(rd, k, 512);
      CHECK(std::abs(moments_contour(rd, k, 2048) - a) <= 1e-10 * (1.0 + std::abs(a)));
    }
  }
}

TEST_CASE("a corrupted coefficient is flagged") {
  Trajectory tr;
  for (int i = 0; i < 3; ++i) {
    Sample s;
    s.state.t = 0.1 * i;
    s.taylor = gallery::huntingford_coeffs(0.0);
    s.moments = moment_vector(gallery::huntingford_map(0.0), 2, 0.0);
    tr.samples.push_back(s);
  }
  auto& bad = tr.samples[2];
  bad.taylor.coeffs[1] += 1e-3;
  bad.moments.M[1] = moments_richardson(bad.taylor, 1);
  const auto rep = trajectory_moment_report(tr);
  CHECK_FALSE(rep.pass());
  for (const auto& c : rep.checks)
    if (c.name == "M1_conservation") {
      CHECK_FALSE(c.pass);
      CHECK(c.max_residual == doctest::Approx(1e-3).epsilon(0.01));
    }
}

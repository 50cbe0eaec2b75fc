#include "doctest.h"
#include "hsflow/asymptotics.hpp"
#include "hsflow/gallery.hpp"

using namespace hsflow;
using namespace hsflow::asymptotics;

namespace {

Trajectory huntingford_run(double t1, double dt = 0.1) {
  RunConfig c;
  c.t0 = gallery::huntingford_t0() + 1e-3;
  c.t1 = t1;
  c.map = gallery::huntingford_map(c.t0);
  c.collision_continuation = true;
  c.cusp_continuation = true;
  c.sample_dt = dt;
  return run_simulation(c);
}

Trajectory offcenter_run(double t0, double t1) {
  RunConfig c;
  c.t0 = t0;
  c.t1 = t1;
  c.map = gallery::offcenter_disk_map(t0).normalized();
  c.q_mode = gallery::offcenter_q_mode();
  c.sample_dt = (t1 - t0) / 40.0;
  return run_simulation(c);
}

}  // namespace

TEST_CASE("targets") {
  const auto tg = targets({2.4, 32.0 / 25.0, 0.2}, 2);
  REQUIRE(tg.omega_hat.size() == 2);
  for (Complex w : tg.omega_hat) {
    CHECK(std::abs(w.real()) < 1e-15);
    CHECK(std::abs(std::abs(w.imag()) - std::sqrt(5.0 / 3.0)) < 1e-14);
  }
  CHECK(std::abs(tg.conserved_product - 5.0 / 3.0) < 1e-14);
  CHECK(tg.r_gap == 1);
  CHECK(targets({1.0, 0.0, 0.5}, 2).r_gap == 2);

  // odd m: the product carries the minus sign
  const auto t3 = targets({1.0, 0.1, 0.1, 0.25}, 3);
  CHECK(std::abs(t3.conserved_product + 1.0) < 1e-14);
  for (Complex w : t3.omega_hat) CHECK(std::abs(std::pow(w, 3) + 1.0) < 1e-14);
}

TEST_CASE("rescaled zeros") {
  SimState s;
  s.rd = RationalDerivative(1.0, {1.5, 2.5}).normalized();
  const double a1 = leading_coeff(s.rd);
  const auto w = rescaled_zeros(s);
  CHECK(std::abs(w[0] - s.rd.zeros()[0] / (a1 * a1)) < 1e-14);

  // a_1 = 4, zero at 8 -> 1/2
  s.rd = RationalDerivative(-4.0 / 72.0, {8.0, -9.0});
  REQUIRE(leading_coeff(s.rd) == doctest::Approx(4.0));
  CHECK(std::abs(rescaled_zeros(s)[0] - 0.5) < 1e-14);

  s.rd = RationalDerivative(1.0, {2.0}, {{3.0, 1}}).normalized();
  CHECK_THROWS_AS(rescaled_zeros(s), Error);
}

TEST_CASE("fit_loglog") {
  const std::vector<double> x{1, 10, 100, 1000};
  const std::vector<double> y{5, 5e-4, 5e-8, 5e-12};
  const auto f = fit_loglog(x, y);
  CHECK(f.slope == doctest::Approx(-4.0));
  CHECK(f.points == 4);
}

TEST_CASE("Huntingford converges to the limiting zeros") {
  const auto tr = huntingford_run(7.2);
  const auto rep = convergence_report(tr);
  CHECK(rep.final_mismatch < 0.05);
  CHECK(rep.matching_stable);
  CHECK(rep.mismatch_decreasing);
  CHECK(rep.max_product_residual <= 1e-8);
  REQUIRE(rep.decades.size() == 2);
  CHECK(rep.decades[0].k == 2);
  CHECK(rep.decades[0].residual_lo >= 10.0 * rep.decades[0].residual_hi);
  CHECK(rep.decades[1].at_floor);
  CHECK(rep.pass());
  CHECK(rep.decay_fits[0].slope == doctest::Approx(-4.0).epsilon(0.02));
  // a_1^4 times the residual stays bounded
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = rep.decay_scaled.size() / 2; i < rep.decay_scaled.size(); ++i) {
    lo = std::min(lo, rep.decay_scaled[i][0]);
    hi = std::max(hi, rep.decay_scaled[i][0]);
  }
  CHECK(hi / lo < 1.1);
}

TEST_CASE("disk report is trivial") {
  RunConfig c;
  c.map = RationalDerivative(1.0, {});
  c.t1 = 2.0;
  c.sample_dt = 0.1;
  const auto tr = run_simulation(c);
  const auto rep = convergence_report(tr);
  CHECK(rep.zero_mismatch.empty());
  CHECK(rep.pass());
  const auto sc = coefficient_scaling_check(tr);
  CHECK(sc.pass());
}

TEST_CASE("pole envelope") {
  const auto [lo, hi] = pole_envelope(2.0, 1.0);
  CHECK(lo == doctest::Approx(0.5));
  CHECK(hi == doctest::Approx(4.5));
  const auto [lo2, hi2] = pole_envelope(1e6, 1.0);
  CHECK(lo2 / 1e6 == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(hi2 / 1e6 == doctest::Approx(1.0).epsilon(1e-5));

  const auto tr = offcenter_run(3.0, 12.0);
  const auto rep = pole_envelope_check(tr);
  CHECK(rep.pass);
  CHECK(rep.worst_violation == 0.0);

  CHECK_THROWS_AS(pole_envelope_check(huntingford_run(0.2)), Error);
}

TEST_CASE("coefficient scaling on the off-center disk") {
  const auto tr = offcenter_run(3.0, 40.0);
  const auto rep = coefficient_scaling_check(tr);
  for (const auto& f : rep.families) {
    INFO(f.name << " slope " << f.fit.slope);
    CHECK(f.pass);
  }
  bool seen = false;
  for (const auto& f : rep.families)
    if (f.name == "ct2*a1^2") {
      seen = true;
      const auto half = std::vector<double>(f.values.begin() + f.values.size() / 2, f.values.end());
      const auto [mn, mx] = std::minmax_element(half.begin(), half.end());
      CHECK(*mn > 0.0);
      CHECK(*mx / *mn < 2.0);
    }
  CHECK(seen);
  CHECK(rep.pass());
}

TEST_CASE("gap case: vanishing first moment") {
  // f = a1 z + a3 z^3 has M_1 = 0, M_2 = a1^3 conj(a3)
  RunConfig c;
  c.map = RationalDerivative(0.6, {Complex(0, 1.6), Complex(0, -1.6)}).normalized();
  c.t1 = 4.0;
  c.sample_dt = 0.1;
  const auto tr = run_simulation(c);
  REQUIRE_FALSE(tr.terminal_event);
  const auto rep = convergence_report(tr);
  CHECK(rep.targets.r_gap == 2);
  CHECK(rep.r_bound_ok);
  for (const auto& g : rep.gap_residual) CHECK(g.size() == 1);
  const auto sc = coefficient_scaling_check(tr);
  CHECK(sc.gap_decreasing);
  CHECK(sc.gap_fit.slope < 0.0);
}

TEST_CASE("repulsion predicates") {
  SimState s;
  s.q = 1.0;
  s.rd = RationalDerivative(1.0, {2.0, 3.0}).normalized();
  auto rep = repulsion_predicates(s);
  CHECK(rep.regime == "two_real");
  CHECK(rep.pass());
  CHECK(rep.values[0].second == doctest::Approx(7.0 / 60.0));
  CHECK(rep.values[1].second == doctest::Approx(1.0 / 24.0));

  s.rd = RationalDerivative(1.0, {1.5, 2.0}).normalized();
  rep = repulsion_predicates(s);
  CHECK(rep.pass());
  CHECK(std::abs(rep.values[3].second) < 1e-12);

  s.rd = RationalDerivative(1.0, {1.01, Complex(-8.0, 9.0), Complex(5.0, -14.0)}).normalized();
  rep = repulsion_predicates(s);
  CHECK(rep.regime == "one_close");
  CHECK(rep.pass());
  CHECK(rep.values[0].second > 0.0);
  CHECK(rep.values[0].second == doctest::Approx(rep.values[1].second).epsilon(0.2));

  // suction reverses the motion
  s.q = -1.0;
  rep = repulsion_predicates(s);
  CHECK(rep.values[0].second < 0.0);
  CHECK(rep.pass());

  s.q = 1.0;
  s.rd = RationalDerivative(1.0, {Complex(0, 2), Complex(0, -2)}).normalized();
  CHECK_THROWS_AS(repulsion_predicates(s), Error);
}

#include <random>

#include "doctest.h"
#include "hsflow/polynomial.hpp"

using namespace hsflow;

TEST_CASE("from_roots and evaluation") {
  const std::vector<Complex> r{2.0, -1.0};
  const Polynomial p = Polynomial::from_roots(r, 3.0);
  REQUIRE(p.degree() == 2);
  CHECK(std::abs(p[0] - Complex(-6.0)) < 1e-15);
  CHECK(std::abs(p[1] - Complex(-3.0)) < 1e-15);
  CHECK(std::abs(p[2] - Complex(3.0)) < 1e-15);
  CHECK(std::abs(p(Complex(1.0, 1.0)) - 3.0 * Complex(-1.0, 1.0) * Complex(2.0, 1.0)) < 1e-14);
}

TEST_CASE("reversed conjugate and deflation") {
  const Polynomial p({Complex(1, 2), Complex(3, -1), Complex(0.5, 0.5)});
  const Polynomial r = p.reversed_conj();
  const Complex z(0.3, -0.7);
  CHECK(std::abs(r(z) - z * z * std::conj(p(1.0 / std::conj(z)))) < 1e-13);
  const std::vector<Complex> roots{Complex(1.5, 0.2), Complex(-2.0, 1.0), Complex(0.0, 3.0)};
  const Polynomial q = Polynomial::from_roots(roots, 2.0);
  const Polynomial d = q.deflate(roots[1]);
  const std::vector<Complex> rest{roots[0], roots[2]};
  const Polynomial expect = Polynomial::from_roots(rest, 2.0);
  for (int k = 0; k <= 2; ++k) CHECK(std::abs(d[k] - expect[k]) < 1e-13);
}

TEST_CASE("companion roots recover random roots") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Complex> roots;
    for (int k = 0; k < 5; ++k) roots.emplace_back(3 * nd(rng), 3 * nd(rng));
    const auto found = polynomial_roots(Polynomial::from_roots(roots, Complex(0.7, -0.2)));
    REQUIRE(found.size() == roots.size());
    for (Complex r : roots) {
      double best = 1e300;
      for (Complex f : found) best = std::min(best, std::abs(f - r));
      CHECK(best < 1e-10 * (1 + std::abs(r)));
    }
  }
}

TEST_CASE("trimming drops negligible leading coefficients") {
  const Polynomial p({Complex(-2.0), Complex(1.0), Complex(1e-20)});
  const auto r = polynomial_roots(p, 1e-12);
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0] - 2.0) < 1e-14);
}

TEST_CASE("inverse product series") {
  const std::vector<Complex> poles{2.0};
  const std::vector<int> orders{2};
  const auto s = inverse_product_series(poles, orders, 3);
  // 1/(1 - z/2)^2 = 1 + z + 3/4 z^2 + 1/2 z^3
  CHECK(std::abs(s[1] - 1.0) < 1e-15);
  CHECK(std::abs(s[2] - 0.75) < 1e-15);
  CHECK(std::abs(s[3] - 0.5) < 1e-15);
}

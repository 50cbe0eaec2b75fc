#include "hsflow/polynomial.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace hsflow {

Polynomial Polynomial::from_roots(std::span<const Complex> roots, Complex lead) {
  std::vector<Complex> c{lead};
  for (Complex r : roots) {
    std::vector<Complex> next(c.size() + 1);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k + 1] += c[k];
      next[k] -= r * c[k];
    }
    c = std::move(next);
  }
  return Polynomial(std::move(c));
}

Complex Polynomial::operator()(Complex z) const {
  Complex acc{};
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (c_.size() <= 1) return Polynomial({Complex{}});
  std::vector<Complex> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::reversed_conj() const {
  std::vector<Complex> r(c_.size());
  for (std::size_t k = 0; k < c_.size(); ++k) r[c_.size() - 1 - k] = std::conj(c_[k]);
  return Polynomial(std::move(r));
}

Polynomial Polynomial::deflate(Complex a) const {
  if (c_.size() <= 1) return Polynomial({Complex{}});
  const std::size_t n = c_.size() - 1;
  std::vector<Complex> q(n);
  Complex acc = c_[n];
  for (std::size_t k = n; k-- > 0;) {
    q[k] = acc;
    acc = c_[k] + acc * a;
  }
  return Polynomial(std::move(q));
}

Polynomial Polynomial::times_z() const {
  std::vector<Complex> r(c_.size() + 1);
  std::copy(c_.begin(), c_.end(), r.begin() + 1);
  return Polynomial(std::move(r));
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Polynomial& Polynomial::operator*=(Complex s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.empty() || b.empty()) return Polynomial();
  std::vector<Complex> r(a.c_.size() + b.c_.size() - 1);
  for (std::size_t i = 0; i < a.c_.size(); ++i)
    for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
  return Polynomial(std::move(r));
}

std::vector<Complex> polynomial_roots(const Polynomial& p, double trim_tol) {
  const auto& c = p.coeffs();
  double cmax = 0.0;
  for (Complex v : c) cmax = std::max(cmax, std::abs(v));
  if (cmax == 0.0) throw Error(ErrorKind::InvalidArgument, "roots of the zero polynomial");
  int deg = p.degree();
  while (deg > 0 && std::abs(c[deg]) <= trim_tol * cmax) --deg;
  if (deg <= 0) return {};

  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::InvalidArgument, "companion eigenvalue solve failed");

  const Polynomial trimmed(std::vector<Complex>(c.begin(), c.begin() + deg + 1));
  const Polynomial dp = trimmed.derivative();
  std::vector<Complex> roots(deg);
  for (int i = 0; i < deg; ++i) {
    Complex z = solver.eigenvalues()[i];
    for (int it = 0; it < 3; ++it) {
      const Complex d = dp(z);
      if (std::abs(d) == 0.0) break;
      const Complex step = trimmed(z) / d;
      if (!std::isfinite(std::abs(step)) || std::abs(step) > 1e-3 * (1.0 + std::abs(z))) break;
      z -= step;
    }
    roots[i] = z;
  }
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return roots;
}

std::vector<Complex> inverse_product_series(std::span<const Complex> poles,
                                            std::span<const int> orders, int order) {
  std::vector<Complex> s(order + 1);
  s[0] = 1.0;
  for (std::size_t j = 0; j < poles.size(); ++j) {
    const Complex r = 1.0 / poles[j];
    for (int rep = 0; rep < orders[j]; ++rep) {
      // multiply by 1/(1 - r z) = sum r^k z^k, i.e. s_k += r * s_{k-1}
      for (int k = 1; k <= order; ++k) s[k] += r * s[k - 1];
    }
  }
  return s;
}

std::vector<Complex> series_product(std::span<const Complex> a, std::span<const Complex> b,
                                    int order) {
  std::vector<Complex> r(order + 1);
  for (int i = 0; i <= order && i < static_cast<int>(a.size()); ++i)
    for (int j = 0; i + j <= order && j < static_cast<int>(b.size()); ++j) r[i + j] += a[i] * b[j];
  return r;
}

}  // namespace hsflow

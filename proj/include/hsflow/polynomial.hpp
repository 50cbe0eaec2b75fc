#pragma once

#include <span>
#include <vector>

#include "hsflow/types.hpp"

namespace hsflow {

/// Dense complex polynomial, coefficients in ascending powers.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Complex> coeffs) : c_(std::move(coeffs)) {}

  static Polynomial constant(Complex c) { return Polynomial({c}); }
  /// lead * prod (z - r_k)
  static Polynomial from_roots(std::span<const Complex> roots, Complex lead = 1.0);

  /// Formal degree (size - 1); trailing zero coefficients are kept.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool empty() const { return c_.empty(); }
  const std::vector<Complex>& coeffs() const { return c_; }
  std::vector<Complex>& coeffs() { return c_; }
  Complex operator[](std::size_t k) const { return k < c_.size() ? c_[k] : Complex{}; }

  Complex operator()(Complex z) const;
  Polynomial derivative() const;
  /// z^d * conj(p(1 / conj z)) for formal degree d.
  Polynomial reversed_conj() const;
  /// Quotient of p(z) / (z - a), remainder discarded.
  Polynomial deflate(Complex a) const;
  Polynomial times_z() const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(Complex s);

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, Complex s) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  std::vector<Complex> c_;
};

/// Roots of the polynomial after trimming trailing coefficients with
/// |c_k| <= trim_tol * max|c|. Companion-matrix eigenvalues, each polished
/// by a few Newton steps on the untrimmed polynomial.
std::vector<Complex> polynomial_roots(const Polynomial& p, double trim_tol = 0.0);

/// Power series of 1 / prod_k (1 - z / p_k)^{n_k} up to z^order.
std::vector<Complex> inverse_product_series(std::span<const Complex> poles,
                                            std::span<const int> orders, int order);

/// Truncated product of two series (length = order + 1).
std::vector<Complex> series_product(std::span<const Complex> a, std::span<const Complex> b,
                                    int order);

}  // namespace hsflow

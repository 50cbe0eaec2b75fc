#pragma once

#include <limits>
#include <vector>

#include "hsflow/polynomial.hpp"
#include "hsflow/types.hpp"

namespace hsflow {

struct PoleEntry {
  Complex z;
  int order = 1;
};

/// g = f' = b * prod (z - w_k) / prod (z - p_j)^{n_j}.
///
/// Zeros are a flat list (repetition = multiplicity); poles carry explicit
/// orders and are pairwise distinct. Construction only checks finiteness and
/// shape; the a_1 > 0 phase constraint is enforced by leading_coeff() and
/// imposed by normalized().
class RationalDerivative {
 public:
  RationalDerivative() : b_(1.0) {}
  RationalDerivative(Complex b, std::vector<Complex> zeros, std::vector<PoleEntry> poles = {});

  Complex b() const { return b_; }
  const std::vector<Complex>& zeros() const { return zeros_; }
  const std::vector<PoleEntry>& poles() const { return poles_; }

  int m() const { return static_cast<int>(zeros_.size()); }
  /// Total pole order.
  int n() const;
  int ell() const { return static_cast<int>(poles_.size()); }
  bool is_polynomial() const { return poles_.empty(); }

  /// Pole locations repeated by order.
  std::vector<Complex> pole_list() const;
  std::vector<Complex> pole_points() const;
  std::vector<int> pole_orders() const;

  /// Numerator b * prod (z - w_k).
  Polynomial numerator() const;
  /// Monic denominator prod (z - p_j)^{n_j}.
  Polynomial denominator() const;

  /// Same divisor with b rotated so that a_1 is real and positive.
  RationalDerivative normalized() const;
  RationalDerivative with_b(Complex b) const;

 private:
  Complex b_;
  std::vector<Complex> zeros_;
  std::vector<PoleEntry> poles_;
};

/// Taylor coefficients a_1..a_N of f about 0 (index 0 holds a_1).
struct TaylorSeries {
  std::vector<Complex> coeffs;

  int order() const { return static_cast<int>(coeffs.size()); }
  Complex a(int j) const {
    return j >= 1 && j <= order() ? coeffs[static_cast<std::size_t>(j - 1)] : Complex{};
  }
  Complex eval(Complex z) const;
  Complex eval_derivative(Complex z) const;
};

/// f = sum_j e_j log(1 - z/p_j) + sum_j sum_k c_jk / (z - p_j)^k + sum_k d_k z^k
///   = sum_j e_j log(1 - z/p_j) + B(z) / C(z),
/// with B(0) = 0, C(0) = 1 and C = prod (1 - z/p_j)^{n_j - 1}.
/// The series forms g = Bt/Ct (Ct(0) = 1) and the Taylor coefficients of
/// B/C (atilde) are carried alongside.
struct LogRationalForm {
  std::vector<Complex> pole_points;
  std::vector<int> pole_orders;
  std::vector<Complex> residues;                  // e_j
  std::vector<std::vector<Complex>> pole_coeffs;  // c_jk, k = 1..n_j-1
  std::vector<Complex> poly_coeffs;               // d_0..d_{m-n+1}
  std::vector<Complex> numerator;                 // b_1..b_deg (index 0 -> b_1)
  std::vector<Complex> denominator;               // c_0..c_{n-ell}, c_0 = 1
  std::vector<Complex> g_numerator;               // bt_0..bt_m
  std::vector<Complex> g_denominator;             // ct_0..ct_n, ct_0 = 1

  /// Log terms plus B/C.
  Complex eval(Complex z) const;
  /// Log terms plus partial fractions plus polynomial part.
  Complex eval_partial_fractions(Complex z) const;
  /// Taylor coefficients atilde_1..atilde_N of B/C.
  std::vector<Complex> rational_part_taylor(int N) const;
};

struct UnivalenceReport {
  bool locally_univalent = false;
  bool boundary_simple = false;
  double min_zero_modulus = std::numeric_limits<double>::infinity();
};

inline constexpr double kPoleClearance = 1e-8;
inline constexpr double kPoleMergeTolerance = 1e-6;

Complex eval_g(const RationalDerivative& rd, Complex z);
Complex eval_g_prime(const RationalDerivative& rd, Complex z);
/// conj(g(1 / conj z)); the value at z = 0 is conj(b) when m == n.
Complex eval_g_star(const RationalDerivative& rd, Complex z);
/// f(z) = integral of g along [0, z] by composite Gauss-Legendre.
Complex eval_f(const RationalDerivative& rd, Complex z, int quad_nodes = 24);
TaylorSeries taylor_coeffs(const RationalDerivative& rd, int N);
/// Taylor coefficients of g: g_k = (k+1) a_{k+1}, k = 0..order.
std::vector<Complex> g_series(const RationalDerivative& rd, int order);
double leading_coeff(const RationalDerivative& rd);
/// a_1 without the sign/phase checks.
Complex leading_coeff_raw(const RationalDerivative& rd);
/// Every zero and pole strictly outside the closed unit disk.
bool is_locally_univalent(const RationalDerivative& rd);
UnivalenceReport univalence_report(const RationalDerivative& rd, int boundary_samples = 1024);
LogRationalForm to_log_rational(const RationalDerivative& rd,
                                double merge_tolerance = kPoleMergeTolerance);

/// True when the closed polygon through the points has no self-intersection.
bool polygon_is_simple(const std::vector<Complex>& pts);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace hsflow

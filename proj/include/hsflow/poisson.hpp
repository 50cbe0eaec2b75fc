#pragma once

#include <vector>

#include "hsflow/polynomial.hpp"
#include "hsflow/rational_map.hpp"

namespace hsflow {

/// Partial-fraction data of the Poisson-Schwarz function
///   P(z) = A0 + sum_k 2 A_k / (z - w_k),
/// together with the source strength q and mu_total = P(0) = integral of d mu.
struct PoissonData {
  std::vector<Complex> A;
  Complex A_inf;
  Complex A0;
  double q = 0.0;
  double mu_total = 0.0;
  /// A0 - sum 2 A_k / w_k, before taking the real part.
  Complex P0;
};

inline constexpr double kZeroGapTolerance = 1e-6;

/// Closed product form for A_k, A_inf, A0 and mu_total.
PoissonData coefficients_A(const RationalDerivative& rd, double q,
                           double zero_gap_tol = kZeroGapTolerance);
Complex eval_P(const PoissonData& pd, const RationalDerivative& rd, Complex z);
Complex eval_P_star(const PoissonData& pd, const RationalDerivative& rd, Complex z);
/// max |P + P* - 2q / (g g*)| over sample points on circles of radius
/// 0.5, 0.8, 1.25 and 2 (points near zeros of g or g* are skipped).
double check_reflection_identity(const PoissonData& pd, const RationalDerivative& rd,
                                 int samples);
/// q normalizing d mu to a probability measure, by the trapezoid rule.
double q_for_unit_growth(const RationalDerivative& rd, int nodes = 1024);
/// integral of d mu for q = 1 by the trapezoid rule.
double mu_total_trapezoid(const RationalDerivative& rd, int nodes = 1024);

/// P = U / N with N the numerator of g, obtained without partial fractions
/// by solving U * rev(N) + rev(U) * N = 2q z^{m-n} D rev(D) with
/// Im U(0)/N(0) = 0. Stays well conditioned when zeros of g collide.
struct PoissonNumerator {
  Polynomial U;
  Polynomial N;
  double q = 0.0;

  Complex P(Complex z) const { return U(z) / N(z); }
  /// conj(P(1/conj z)) = rev(U)(z) / rev(N)(z).
  Complex P_star(Complex z) const;
  double P0() const { return (U[0] / N[0]).real(); }
};

/// N: numerator coefficients (degree m), D: monic denominator (degree n).
PoissonNumerator poisson_numerator(const Polynomial& N, const Polynomial& D, double q);

}  // namespace hsflow

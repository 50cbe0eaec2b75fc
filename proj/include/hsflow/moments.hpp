#pragma once

#include <cstdint>
#include <vector>

#include "hsflow/polynomial.hpp"
#include "hsflow/rational_map.hpp"

namespace hsflow {

/// Harmonic moments M_0..M_K, the Dirichlet-type quantity
/// N_0 = sum_{j>=2} j |a_j|^2 = M_0 - a_1^2, and the accumulated source Q.
struct MomentVector {
  std::vector<Complex> M;
  double N0 = 0.0;
  double Q_accum = 0.0;
};

inline constexpr std::uint64_t kRichardsonBudget = 50'000'000;

/// (1/2 pi i) \oint f^k f* f' dz by the trapezoid rule, with f taken from
/// the log-rational form and f' = g evaluated directly.
Complex moments_contour(const RationalDerivative& rd, int k, int nodes = 1024);
/// Same quadrature with f and f' from a (long) truncated series.
Complex moments_contour(const TaylorSeries& series, int k, int nodes = 1024);
/// Exact tuple enumeration of Richardson's formula
///   M_k = sum i_1 a_{i_1} ... a_{i_{k+1}} conj(a_{i_1 + ... + i_{k+1}}).
Complex moments_richardson(const TaylorSeries& series, int k,
                           std::uint64_t budget = kRichardsonBudget);

/// sum_{j>=2} j |a_j|^2.
double dirichlet_excess(const TaylorSeries& series);
/// Taylor series of f long enough that the truncation error on the closed
/// disk is below roundoff (capped at max_order).
TaylorSeries long_series(const RationalDerivative& rd, int max_order = 4096);
/// Series of f from g = N / prod (z - p_j)^{n_j}.
TaylorSeries series_from_numerator(const Polynomial& N, const std::vector<PoleEntry>& poles,
                                   int order);

/// Moments M_0..M_K of a state. Polynomial g uses Richardson; rational g uses
/// the contour route.
MomentVector moment_vector(const RationalDerivative& rd, int K, double Q);

struct Trajectory;

struct MomentCheck {
  std::string name;
  bool pass = true;
  double max_residual = 0.0;
  double tolerance = 0.0;
  std::vector<double> series;
};

struct MomentReport {
  std::vector<MomentCheck> checks;
  bool pass() const;
};

struct MomentTolerances {
  double conservation = 1e-8;
  double mass = 1e-8;
  double monotone = 1e-10;
  double inequality = 1e-10;
};

/// Conservation of M_k (k >= 1), M_0 = M_0(0) + 2Q, N_0 nonincreasing,
/// a_1^2 >= a_1(0)^2 + 2Q, |a_k| <= sqrt(N_0(0) / k), and
/// a_1 / sqrt(M_0(0) + 2Q) nondecreasing.
MomentReport trajectory_moment_report(const Trajectory& traj, const MomentTolerances& tol = {});

}  // namespace hsflow

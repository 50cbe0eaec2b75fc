#pragma once

#include <vector>

#include "hsflow/dynamics.hpp"
#include "hsflow/rational_map.hpp"

namespace hsflow::oracle {

/// Truncated Taylor series of f evolved directly by the Loewner-Kufarev
/// equation df/dt = z f' P.
struct SpectralState {
  double t = 0.0;
  TaylorSeries coeffs;
  double q = 1.0;
  int node_count = 0;
  double Q = 0.0;
  /// |Im a_1| / |a_1| before the last re-phase.
  double constraint_residual = 0.0;
};

inline constexpr int kDefaultOrder = 64;
inline constexpr double kBoundaryFloor = 1e-8;

/// Spectral state of a map with N coefficients and 4N boundary nodes.
SpectralState from_map(const RationalDerivative& rd, double t = 0.0, int N = kDefaultOrder);
SpectralState from_series(const TaylorSeries& series, double t = 0.0, int N = kDefaultOrder);

/// Smallest |f'| on the boundary nodes.
double min_boundary_derivative(const SpectralState& s);

/// p_0..p_{N-1} of P from the boundary data q / |f'|^2 (one forward FFT).
std::vector<Complex> P_spectral(const SpectralState& s);

/// Double node_count until the top band of the boundary spectrum is at
/// roundoff (alias_floor relative to max |q / |f'|^2|), up to max_nodes.
void adapt_nodes(SpectralState& s, double alias_floor = 1e-14, int max_nodes = 1 << 16);

/// da_1..da_N from z f' P truncated at order N.
std::vector<Complex> lk_coefficient_rhs(const SpectralState& s);

/// q giving P(0) = 1 (unit growth) for the state's coefficients.
double unit_growth_q(const SpectralState& s);

struct OracleOptions {
  /// UnitGrowth or Constant; schedules need a root representation.
  QMode q_mode;
  double rtol = 1e-9;
  double atol = 1e-12;
  double sample_dt = 0.01;
  /// Largest |a_k| over the top quarter of the series, relative to a_1.
  double tail_floor = 1e-13;
  int max_order = 1024;
};

/// Integrate from `initial` to t_end, returning the state at t0 + k sample_dt
/// and at t_end. The order doubles whenever the tail rises above the floor.
std::vector<SpectralState> run_oracle(const SpectralState& initial, double t_end,
                                      const OracleOptions& opt = {});

double tail_level(const SpectralState& s);

struct CrossPoint {
  double t = 0.0;
  double coeff_diff = 0.0;
  double zero_diff = 0.0;
};

struct CrossReport {
  std::vector<CrossPoint> points;
  double max_coeff_diff = 0.0;
  double max_zero_diff = 0.0;
  /// Zeros inside 0.9 times the smallest pole modulus; the rest are skipped.
  long zeros_compared = 0;
  double coeff_tolerance = 1e-7;
  double zero_tolerance = 1e-6;
  bool pass() const;
};

/// Compare trajectory samples and oracle states at shared times: Taylor
/// coefficients (max abs difference) and zeros of the truncated g against the
/// trajectory zeros (nearest-root matching) inside the disk of convergence.
CrossReport cross_validate(const Trajectory& traj, const std::vector<SpectralState>& states,
                           double time_tol = 1e-9);

/// Zeros of the truncated g = sum k a_k z^{k-1}.
std::vector<Complex> series_zeros(const TaylorSeries& s, double trim_tol = 1e-12);

}  // namespace hsflow::oracle

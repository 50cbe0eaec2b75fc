#pragma once

#include <string>
#include <vector>

#include "hsflow/dynamics.hpp"

namespace hsflow::asymptotics {

struct AsymptoticTargets {
  int m = 0;
  /// Limits of the rescaled zeros: the m roots of z^m = -1 / ((m+1) conj(M_m)),
  /// principal root first.
  std::vector<Complex> omega_hat;
  /// First k >= 1 with M_k != 0 (0 when every M_k vanishes).
  int r_gap = 0;
  /// Product of the rescaled zeros, (-1)^m / ((m+1) conj(M_m)).
  Complex conserved_product;
};

/// From the moments M_0..M_m of a polynomial map of degree m+1.
AsymptoticTargets targets(const std::vector<Complex>& M, int m, double zero_tol = 1e-13);

/// w_k a_1^{-(m+2)/m}. RegimeMismatch unless the map is polynomial with m >= 1.
std::vector<Complex> rescaled_zeros(const SimState& state);

struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};
/// Least-squares line through (log x, log y), skipping y <= 0.
LogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceOptions {
  /// Decay residuals below floor * (1 + |M_{k-1}|) count as converged.
  double roundoff_floor = 1e-11;
  double decade_lo = 1e2;
  double decade_hi = 1e3;
  double decade_factor = 10.0;
  double product_tolerance = 1e-8;
};

struct DecayDecade {
  int k = 0;
  double residual_lo = 0.0;  // at a_1 = decade_lo
  double residual_hi = 0.0;  // at a_1 = decade_hi
  bool at_floor = false;
  bool pass = false;
};

struct ConvergenceReport {
  AsymptoticTargets targets;
  std::vector<double> t;
  std::vector<double> a1;
  /// max_k |w~_k - w^_k| after minimal-distance matching.
  std::vector<double> zero_mismatch;
  std::vector<std::vector<int>> assignment;
  /// |a_k a_1^k - conj(M_{k-1})| for k = 2..m+1 (index k-2).
  std::vector<std::vector<double>> decay_residual;
  /// Same residuals times a_1^4.
  std::vector<std::vector<double>> decay_scaled;
  /// |a_s a_1^{r+1}| for 2 <= s <= r (gap case).
  std::vector<std::vector<double>> gap_residual;
  /// Relative error of prod w~_k against the conserved value.
  std::vector<double> product_residual;
  /// Fitted slope of log residual vs log a_1 per k over the second half.
  std::vector<LogFit> decay_fits;
  std::vector<DecayDecade> decades;
  bool matching_stable = true;
  bool mismatch_decreasing = true;
  double final_mismatch = 0.0;
  double max_product_residual = 0.0;
  bool r_bound_ok = true;
  bool pass() const;
};

ConvergenceReport convergence_report(const Trajectory& traj, const ConvergenceOptions& opt = {});

struct EnvelopeReport {
  /// Per sample, per distinct pole: |p_j(t)| / a_1(t), with the constant bounds.
  std::vector<double> t;
  std::vector<std::vector<double>> ratio;
  std::vector<double> lower, upper;
  double worst_violation = 0.0;
  bool pass = true;
};

/// Two-sided pole envelope against the first sample. RegimeMismatch for
/// polynomial runs.
EnvelopeReport pole_envelope_check(const Trajectory& traj, double tol = 1e-8);
/// Envelope [(r + 1/r - 2) / a, (r + 1/r + 2) / a] for |p(0)| = r, a_1(0) = a.
std::pair<double, double> pole_envelope(double pole_modulus, double a1);

struct ScalingFamily {
  std::string name;
  /// Expected behaviour: "bounded" or "comparable" (bounded above and below).
  std::string kind;
  std::vector<double> values;
  LogFit fit;
  bool pass = true;
};

struct ScalingReport {
  std::vector<ScalingFamily> families;
  /// Per N: fitted s_N for sup |f - f_N| and sup |f' - f_N'| (no pass bar).
  std::vector<int> truncation_orders;
  std::vector<double> s_N_f, s_N_fprime;
  /// Corollary-type boundary expression per sample (gap order r from the run).
  std::vector<double> gap_sup;
  LogFit gap_fit;
  bool gap_decreasing = true;
  bool pass() const;
};

struct ScalingOptions {
  /// Allowed |slope| of log ratio vs log a_1 over the second half.
  double slope_tolerance = 0.25;
  std::vector<int> truncation_orders{2, 4, 8, 16};
  int boundary_nodes = 256;
};

ScalingReport coefficient_scaling_check(const Trajectory& traj, const ScalingOptions& opt = {});

struct RepulsionReport {
  std::string regime;  // "two_real" or "one_close"
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, bool>> predicates;
  bool pass() const;
};

struct RepulsionOptions {
  double close_eps = 0.1;
  double separation = 10.0;
};

/// Sign predicates of the two small-m regimes. RegimeMismatch otherwise.
RepulsionReport repulsion_predicates(const SimState& state, const RepulsionOptions& opt = {});

}  // namespace hsflow::asymptotics

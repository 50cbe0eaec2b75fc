#pragma once

#include <string>
#include <vector>

#include "hsflow/dynamics.hpp"
#include "hsflow/rational_map.hpp"

namespace hsflow::gallery {

/// A closed-form solution evaluated at one instant.
struct GalleryState {
  std::string name;
  double t = 0.0;
  RationalDerivative rd;
  /// Taylor coefficients of f when f is a polynomial, empty otherwise.
  TaylorSeries taylor;
  /// Source strength of the closed-form parameterization at t.
  double q = 0.0;
};

struct GalleryEntry {
  std::string name;
  std::string description;
  double t_min;  // open or closed per entry, see description
  double t_max;
  std::vector<std::pair<std::string, double>> milestones;
};

const std::vector<GalleryEntry>& entries();
/// Throws UnknownEntry.
GalleryState evaluate(const std::string& name, double t);

// Real-coefficient cubic with a_1 = e^t.
inline constexpr double kHuntingfordM1 = 32.0 / 25.0;
inline constexpr double kHuntingfordM2 = 1.0 / 5.0;
double huntingford_t0();
/// a_1, a_2, a_3 at t; OutOfDomain for t < t0.
TaylorSeries huntingford_coeffs(double t);
RationalDerivative huntingford_map(double t);
/// q(t) = sum k a_k da_k/dt for the closed form.
double huntingford_q(double t);

// f = b z (z - a) / (z - t), pole at z = t.
struct OffCenterParams {
  double a = 0.0;
  double b = 0.0;
};
/// OutOfDomain unless 1 < t < inf and t != 2.
OffCenterParams offcenter_params(double t);
/// g at t; at t = 2 the degenerate map 6 / (z - 2)^2 of f = 3z / (2 - z).
RationalDerivative offcenter_disk_map(double t);
/// f(z, t) by the closed form.
Complex offcenter_f(double t, Complex z);
/// Source strength that moves the pole at unit speed.
double offcenter_q(double t);
/// The same choice as a state-dependent schedule for the integrator.
QMode offcenter_q_mode();

struct TwoRealRootsFields {
  double alpha = 0.0;
  double beta = 0.0;
  /// (|b|^2 / q) d/dt log w_1 and log w_2.
  double rate1 = 0.0;
  double rate2 = 0.0;
  int product_rate_sign = 0;
  /// Sign of d/dt (w_2 / w_1).
  int ratio_rate_sign = 0;
};
/// OutOfDomain unless 1 < w1 < w2.
TwoRealRootsFields two_real_roots_fields(double w1, double w2);

struct CardioidReference {
  double A1 = 0.0;
  double A0 = 0.0;
  double log_rate = 0.0;
};
/// m = 1 specialization with zero w > 1 and real scale b.
CardioidReference cardioid_reference(double w, double b, double q);

/// max over nodes of |Re(f_t conj(z f')) - q| with f_t by centered differences.
double boundary_relation_residual(const std::string& name, double t, int nodes = 512,
                                  double h = 1e-5);

}  // namespace hsflow::gallery

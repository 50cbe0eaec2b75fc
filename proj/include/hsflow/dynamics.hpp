#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsflow/moments.hpp"
#include "hsflow/poisson.hpp"
#include "hsflow/rational_map.hpp"

namespace hsflow {

/// How the source strength q is chosen along a run.
struct QMode {
  enum class Kind { UnitGrowth, Constant, Schedule };
  Kind kind = Kind::UnitGrowth;
  double q = 1.0;
  /// q(t, state) for Kind::Schedule.
  std::function<double(double, const RationalDerivative&)> schedule;

  static QMode unit_growth() { return {}; }
  static QMode constant(double q) { return {Kind::Constant, q, {}}; }
  static QMode scheduled(std::function<double(double, const RationalDerivative&)> fn) {
    return {Kind::Schedule, 0.0, std::move(fn)};
  }
};

/// q at time t. Unit growth uses the closed form mu_total(q = 1).
double resolve_q(const QMode& mode, double t, const RationalDerivative& rd);

enum class Representation { Roots, Coefficients };

struct SimState {
  double t = 0.0;
  RationalDerivative rd;
  double Q = 0.0;
  double q = 0.0;
  double constraint_residual = 0.0;
  Representation rep = Representation::Roots;
  /// Zeros that left every finite disk while the representation was
  /// coefficient based (degree drop of the numerator).
  int zeros_at_infinity = 0;
  Complex A0;
  double mu_total = 0.0;
};

enum class EventKind { Cusp, Collision, Escape, PoleDrop };
std::string_view to_string(EventKind kind);

struct EventRecord {
  EventKind kind = EventKind::Cusp;
  double time = 0.0;
  std::vector<int> indices;
  std::vector<Complex> positions;
  /// Free-form numeric details (entry time, minimum modulus, gap, ...).
  std::vector<std::pair<std::string, double>> values;
  std::string note;
};

struct EventThresholds {
  double cusp = 1e-4;
  double collision = 1e-5;
  double escape = 1e6;
};

struct Sample {
  SimState state;
  TaylorSeries taylor;
  MomentVector moments;
};

struct StepRecord {
  double t = 0.0;
  double a1 = 0.0;
  std::vector<double> pole_moduli;
};

struct StepStats {
  long accepted = 0;
  long rejected_on_error = 0;
  long coefficient_steps = 0;
  double max_two_form_mismatch = 0.0;
  double max_constraint_residual = 0.0;
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<EventRecord> events;
  std::vector<StepRecord> steps;
  StepStats stats;
  std::optional<EventRecord> terminal_event;
  int moment_order = 0;
};

struct Derivatives {
  std::vector<Complex> omega_dot;
  /// One entry per distinct pole.
  std::vector<Complex> zeta_dot;
  Complex b_dot;
  /// |form1 - form2| / scale over all zeros for the two zero-velocity formulas.
  double two_form_mismatch = 0.0;
  PoissonData pd;
};

/// Zero, pole and scale velocities at a state with simple zeros.
Derivatives rhs(const RationalDerivative& rd, double q);
/// d/dt log w_k by each of the two equivalent formulas.
std::vector<Complex> zero_log_velocity_residue_form(const RationalDerivative& rd,
                                                    const PoissonData& pd);
std::vector<Complex> zero_log_velocity_reflection_form(const RationalDerivative& rd,
                                                       const PoissonData& pd);

struct CoefficientDerivative {
  /// Time derivative of the numerator N of g = N / D.
  Polynomial N_dot;
  std::vector<Complex> zeta_dot;
  PoissonNumerator pn;
};

/// Motion of g = N / prod (z - p_j)^{n_j} from dg/dt = (z g P)', with P from the
/// polynomial route (no partial fractions, valid through zero collisions).
CoefficientDerivative coefficient_rhs(const Polynomial& N, const std::vector<PoleEntry>& poles,
                                      double q);

struct RunConfig {
  RationalDerivative map;
  QMode q_mode;
  double t0 = 0.0;
  double t1 = 1.0;
  double rtol = 1e-9;
  double atol = 1e-12;
  EventThresholds events;
  double sample_dt = 0.01;
  bool collision_continuation = false;
  /// Keep integrating through a tangential cusp approach instead of stopping.
  bool cusp_continuation = false;
  double collision_window = 1e-2;
  int taylor_order = 16;
  bool log_steps = false;
  /// Maximum accepted step size (0 = unlimited).
  double max_step = 0.0;
};

/// One adaptive step of the root system from state (rtol, atol as in cfg).
/// h = 0 returns the state unchanged.
SimState step(const SimState& state, double h, const QMode& mode, double rtol = 1e-9,
              double atol = 1e-12);

/// Threshold tests on a single state (no time localisation).
std::vector<EventRecord> detect_events(const SimState& state, const EventThresholds& thr);

/// Sample at a state with diagnostics attached.
Sample make_sample(const SimState& state, int taylor_order, int moment_order);

/// Integrate per configuration. Throws Error on fatal failure; the partially
/// built trajectory is available through RunFailure.
Trajectory run_simulation(const RunConfig& cfg);

class RunFailure : public Error {
 public:
  RunFailure(const Error& e, Trajectory partial)
      : Error(e.kind(), e.what()), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Re-integrate a collision-terminated trajectory with continuation enabled.
/// A trajectory without a pending collision is returned unchanged.
Trajectory continue_through_collision(const Trajectory& traj, const RunConfig& cfg,
                                      double window);

struct ConservationResidual {
  std::vector<double> t;
  /// |d/dt Re(sum log w - sum log p) - Re target|
  std::vector<double> modulus_residual;
  /// |d/dt Im(sum log w - sum log p) - Im target|
  std::vector<double> argument_residual;
  double max_modulus = 0.0;
  double max_argument = 0.0;
};

/// Centered differences over consecutive samples; target (m-n+2) mu_total
/// when m > n, mu_total - A_0 when m = n. Needs three distinct sample times.
ConservationResidual conservation_residual(const Trajectory& traj);

/// Minimal-total-distance relabelling of `next` against `prev`.
std::vector<Complex> match_labels(const std::vector<Complex>& prev,
                                  const std::vector<Complex>& next);

}  // namespace hsflow

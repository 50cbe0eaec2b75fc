#include "hsflow/dynamics.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <numeric>

namespace hsflow {

namespace odeint = boost::numeric::odeint;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Cusp: return "Cusp";
    case EventKind::Collision: return "Collision";
    case EventKind::Escape: return "Escape";
    case EventKind::PoleDrop: return "PoleDrop";
  }
  return "Unknown";
}

double resolve_q(const QMode& mode, double t, const RationalDerivative& rd) {
  switch (mode.kind) {
    case QMode::Kind::Constant: return mode.q;
    case QMode::Kind::Schedule: return mode.schedule(t, rd);
    case QMode::Kind::UnitGrowth: break;
  }
  return 1.0 / coefficients_A(rd, 1.0).mu_total;
}

// ---------------------------------------------------------------------------
// Right-hand sides

std::vector<Complex> zero_log_velocity_residue_form(const RationalDerivative& rd,
                                                    const PoissonData& pd) {
  const auto& w = rd.zeros();
  const int m = rd.m();
  std::vector<Complex> out(m);
  for (int k = 0; k < m; ++k) {
    Complex s = pd.A0 + 2.0 * pd.A[k] / w[k];
    for (int j = 0; j < m; ++j)
      if (j != k) s += 2.0 * (pd.A[k] + pd.A[j]) / (w[k] - w[j]);
    for (const auto& p : rd.poles())
      s -= static_cast<double>(p.order) * 2.0 * pd.A[k] / (w[k] - p.z);
    out[k] = -s;
  }
  return out;
}

std::vector<Complex> zero_log_velocity_reflection_form(const RationalDerivative& rd,
                                                       const PoissonData& pd) {
  const auto& w = rd.zeros();
  const int m = rd.m();
  std::vector<Complex> out(m);
  for (int k = 0; k < m; ++k) {
    Complex bracket = 1.0;
    for (int j = 0; j < m; ++j) bracket += 1.0 / (1.0 - std::conj(w[j]) * w[k]);
    for (const auto& p : rd.poles())
      bracket -= static_cast<double>(p.order) / (1.0 - std::conj(p.z) * w[k]);
    out[k] = eval_P_star(pd, rd, w[k]) - 2.0 * pd.A[k] / w[k] * bracket;
  }
  return out;
}

Derivatives rhs(const RationalDerivative& rd, double q) {
  Derivatives d;
  d.pd = coefficients_A(rd, q);
  const auto f1 = zero_log_velocity_residue_form(rd, d.pd);
  const auto f2 = zero_log_velocity_reflection_form(rd, d.pd);
  const auto& w = rd.zeros();
  d.omega_dot.resize(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    d.omega_dot[k] = w[k] * f1[k];
    // largest summand of the reflection form sets the roundoff level
    double bracket = 1.0;
    for (std::size_t j = 0; j < w.size(); ++j) bracket += 1.0 / std::abs(1.0 - std::conj(w[j]) * w[k]);
    for (const auto& p : rd.poles()) bracket += p.order / std::abs(1.0 - std::conj(p.z) * w[k]);
    const double scale = std::max({std::abs(f1[k]), std::abs(f2[k]), std::abs(d.pd.A0),
                                   std::abs(2.0 * d.pd.A[k] / w[k]) * bracket});
    if (scale > 0.0)
      d.two_form_mismatch = std::max(d.two_form_mismatch, std::abs(f1[k] - f2[k]) / scale);
  }
  for (const auto& p : rd.poles()) d.zeta_dot.push_back(p.z * eval_P_star(d.pd, rd, p.z));
  d.b_dot = static_cast<double>(rd.m() - rd.n() + 1) * d.pd.A0 * rd.b();
  return d;
}

namespace {

Polynomial monic_denominator(const std::vector<PoleEntry>& poles) {
  std::vector<Complex> roots;
  for (const auto& p : poles)
    for (int k = 0; k < p.order; ++k) roots.push_back(p.z);
  return Polynomial::from_roots(roots, 1.0);
}

CoefficientDerivative coefficient_rhs_from(const Polynomial& N,
                                           const std::vector<PoleEntry>& poles,
                                           PoissonNumerator pn) {
  CoefficientDerivative cd;
  const Polynomial zU = pn.U.times_z();
  Polynomial Ndot = zU.derivative();
  for (const auto& p : poles) {
    const Complex zd = -p.z * pn.U(p.z) / N(p.z);
    cd.zeta_dot.push_back(zd);
    const Polynomial R = zU + N * zd;
    Ndot -= R.deflate(p.z) * Complex(static_cast<double>(p.order));
  }
  Ndot.coeffs().resize(N.coeffs().size());
  cd.N_dot = std::move(Ndot);
  cd.pn = std::move(pn);
  return cd;
}

}  // namespace

CoefficientDerivative coefficient_rhs(const Polynomial& N, const std::vector<PoleEntry>& poles,
                                      double q) {
  return coefficient_rhs_from(N, poles, poisson_numerator(N, monic_denominator(poles), q));
}

// ---------------------------------------------------------------------------
// Labels and events

std::vector<Complex> match_labels(const std::vector<Complex>& prev,
                                  const std::vector<Complex>& next) {
  const std::size_t m = prev.size();
  const Complex inf(std::numeric_limits<double>::infinity(), 0.0);
  if (m == 0) return {};
  auto cost = [&](std::size_t i, std::size_t j) {
    if (j >= next.size()) return std::isfinite(std::abs(prev[i])) ? 1e300 : 0.0;
    if (!std::isfinite(std::abs(prev[i]))) return 1e300;
    return std::abs(prev[i] - next[j]);
  };
  std::vector<std::size_t> perm(m), best;
  std::iota(perm.begin(), perm.end(), 0);
  if (m <= 8) {
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < m && c < best_cost; ++i) c += cost(i, perm[i]);
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> used(m, false);
    best.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t arg = 0;
      double c = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < m; ++j)
        if (!used[j] && cost(i, j) < c) {
          c = cost(i, j);
          arg = j;
        }
      used[arg] = true;
      best[i] = arg;
    }
  }
  std::vector<Complex> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = best[i] < next.size() ? next[best[i]] : inf;
  return out;
}

namespace {

double min_zero_gap(const std::vector<Complex>& w, int* ia = nullptr, int* ja = nullptr) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      const double d = std::abs(w[i] - w[j]);
      if (d < g) {
        g = d;
        if (ia) *ia = static_cast<int>(i);
        if (ja) *ja = static_cast<int>(j);
      }
    }
  return g;
}

double min_modulus(const std::vector<Complex>& w, int* ka = nullptr) {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < w.size(); ++k)
    if (std::abs(w[k]) < g) {
      g = std::abs(w[k]);
      if (ka) *ka = static_cast<int>(k);
    }
  return g;
}

double max_modulus(const std::vector<Complex>& w, int* ka = nullptr) {
  double g = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (std::abs(w[k]) > g) {
      g = std::abs(w[k]);
      if (ka) *ka = static_cast<int>(k);
    }
  return g;
}

}  // namespace

std::vector<EventRecord> detect_events(const SimState& state, const EventThresholds& thr) {
  std::vector<EventRecord> out;
  const auto& w = state.rd.zeros();
  int k = -1, i = -1, j = -1;
  const double mn = min_modulus(w, &k);
  if (k >= 0 && mn - 1.0 < thr.cusp)
    out.push_back({EventKind::Cusp, state.t, {k}, {w[k]}, {{"modulus_minus_one", mn - 1.0}}, ""});
  const double gap = min_zero_gap(w, &i, &j);
  if (i >= 0 && gap < thr.collision)
    out.push_back({EventKind::Collision, state.t, {i, j}, {w[i], w[j]}, {{"gap", gap}}, ""});
  if (state.rd.m() == state.rd.n()) {
    const double mx = max_modulus(w, &k);
    if (k >= 0 && mx > thr.escape)
      out.push_back({EventKind::Escape, state.t, {k}, {w[k]}, {{"modulus", mx}}, ""});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Samples

namespace {

void attach_poisson(SimState& s) {
  try {
    const PoissonData pd = coefficients_A(s.rd, s.q);
    s.A0 = pd.A0;
    s.mu_total = pd.mu_total;
  } catch (const Error&) {
    const auto pn = poisson_numerator(s.rd.numerator(), s.rd.denominator(), s.q);
    const int m = s.rd.m();
    s.mu_total = pn.P0();
    s.A0 = pn.U[m] / pn.N[m];
  }
}

int series_length_for(const std::vector<PoleEntry>& poles, int m, int n) {
  double rho = std::numeric_limits<double>::infinity();
  for (const auto& p : poles) rho = std::min(rho, std::abs(p.z));
  if (!std::isfinite(rho)) return m + 1;
  return static_cast<int>(std::min(42.0 / std::log(rho) + 2.0 * (m + n) + 16.0, 4096.0));
}

}  // namespace

Sample make_sample(const SimState& state, int taylor_order, int moment_order) {
  Sample s;
  s.state = state;
  if (s.state.zeros_at_infinity == 0 && s.state.rd.m() >= s.state.rd.n()) attach_poisson(s.state);
  s.taylor = taylor_coeffs(state.rd, std::max(taylor_order, 1));
  s.moments = moment_vector(state.rd, moment_order, state.Q);
  return s;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

using State = std::vector<double>;
using Dopri = odeint::runge_kutta_dopri5<State>;
using Checker = odeint::default_error_checker<double, odeint::range_algebra, odeint::default_operations>;
using Adjuster = odeint::default_step_adjuster<double, double>;
using Controlled = odeint::controlled_runge_kutta<Dopri, Checker, Adjuster>;
using Dense = odeint::dense_output_runge_kutta<Controlled>;

// Error norm on atol + rtol |x| only (no derivative term), as in Hairer's DOPRI5.
Dense make_dense(double atol, double rtol, double max_dt) {
  return Dense(Controlled(Checker(atol, rtol, 1.0, 0.0), Adjuster(max_dt)));
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRootTrim = 1e-13;

struct Layout {
  int m = 0;
  std::vector<int> orders;  // per distinct pole
  int ell() const { return static_cast<int>(orders.size()); }
  // roots mode: log w (2m), log p (2 ell), log b (2), Q (1)
  int roots_size() const { return 2 * m + 2 * ell() + 3; }
  // coefficient mode: N (2(m+1)), log p (2 ell), Q (1)
  int coeff_size() const { return 2 * (m + 1) + 2 * ell() + 1; }
};

Complex get(const State& y, int i) { return {y[2 * i], y[2 * i + 1]}; }
void put(State& y, int i, Complex v) {
  y[2 * i] = v.real();
  y[2 * i + 1] = v.imag();
}

State pack_roots(const Layout& L, const RationalDerivative& rd, double Q) {
  State y(L.roots_size());
  for (int k = 0; k < L.m; ++k) put(y, k, std::log(rd.zeros()[k]));
  for (int j = 0; j < L.ell(); ++j) put(y, L.m + j, std::log(rd.poles()[j].z));
  put(y, L.m + L.ell(), std::log(rd.b()));
  y.back() = Q;
  return y;
}

RationalDerivative unpack_roots_raw(const Layout& L, const State& y) {
  std::vector<Complex> w(L.m);
  for (int k = 0; k < L.m; ++k) w[k] = std::exp(get(y, k));
  std::vector<PoleEntry> p(L.ell());
  for (int j = 0; j < L.ell(); ++j) p[j] = {std::exp(get(y, L.m + j)), L.orders[j]};
  return RationalDerivative(std::exp(get(y, L.m + L.ell())), std::move(w), std::move(p));
}

State pack_coeffs(const Layout& L, const Polynomial& N, const std::vector<PoleEntry>& poles,
                  double Q) {
  State y(L.coeff_size());
  for (int k = 0; k <= L.m; ++k) put(y, k, N[k]);
  for (int j = 0; j < L.ell(); ++j) put(y, L.m + 1 + j, std::log(poles[j].z));
  y.back() = Q;
  return y;
}

Polynomial unpack_N(const Layout& L, const State& y) {
  std::vector<Complex> c(L.m + 1);
  for (int k = 0; k <= L.m; ++k) c[k] = get(y, k);
  return Polynomial(std::move(c));
}

std::vector<PoleEntry> unpack_coeff_poles(const Layout& L, const State& y) {
  std::vector<PoleEntry> p(L.ell());
  for (int j = 0; j < L.ell(); ++j) p[j] = {std::exp(get(y, L.m + 1 + j)), L.orders[j]};
  return p;
}

Complex a1_of_numerator(const Polynomial& N, const std::vector<PoleEntry>& poles) {
  Complex v = N[0];
  for (const auto& p : poles)
    for (int k = 0; k < p.order; ++k) v /= -p.z;
  return v;
}

void roots_rhs(const Layout& L, const QMode& mode, const State& y, State& dy, double t,
               double* mismatch) {
  dy.assign(y.size(), 0.0);
  const RationalDerivative rd = unpack_roots_raw(L, y).normalized();
  const double q = resolve_q(mode, t, rd);
  const Derivatives d = rhs(rd, q);
  if (mismatch) *mismatch = std::max(*mismatch, d.two_form_mismatch);
  for (int k = 0; k < L.m; ++k) put(dy, k, d.omega_dot[k] / rd.zeros()[k]);
  for (int j = 0; j < L.ell(); ++j) put(dy, L.m + j, d.zeta_dot[j] / rd.poles()[j].z);
  put(dy, L.m + L.ell(), static_cast<double>(L.m - rd.n() + 1) * d.pd.A0);
  dy.back() = q;
  for (double v : dy)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonLocallyUnivalent, "non-finite velocity");
}

void coeff_rhs(const Layout& L, const QMode& mode, const State& y, State& dy, double t) {
  dy.assign(y.size(), 0.0);
  const Polynomial N = unpack_N(L, y);
  const auto poles = unpack_coeff_poles(L, y);
  const Polynomial D = monic_denominator(poles);
  double q;
  PoissonNumerator pn;
  if (mode.kind == QMode::Kind::UnitGrowth) {
    pn = poisson_numerator(N, D, 1.0);
    q = 1.0 / pn.P0();
    pn.U *= Complex(q);
    pn.q = q;
  } else if (mode.kind == QMode::Kind::Constant) {
    q = mode.q;
    pn = poisson_numerator(N, D, q);
  } else {
    const auto roots = polynomial_roots(N, kRootTrim);
    const RationalDerivative rd(N[roots.size()], roots, poles);
    q = resolve_q(mode, t, rd.normalized());
    pn = poisson_numerator(N, D, q);
  }
  if (!(q > 0.0) || !std::isfinite(q))
    throw Error(ErrorKind::NonLocallyUnivalent, "source strength lost positivity");
  const CoefficientDerivative cd = coefficient_rhs_from(N, poles, std::move(pn));
  for (int k = 0; k <= L.m; ++k) put(dy, k, cd.N_dot[k]);
  for (int j = 0; j < L.ell(); ++j) put(dy, L.m + 1 + j, cd.zeta_dot[j] / poles[j].z);
  dy.back() = q;
  for (double v : dy)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonLocallyUnivalent, "non-finite velocity");
}

class Runner {
 public:
  explicit Runner(const RunConfig& cfg) : cfg_(cfg) {}
  Trajectory run();

 private:
  void system(const State& y, State& dy, double t);
  SimState to_state(const State& y, double t, const std::vector<Complex>& labels) const;
  std::vector<Complex> zeros_of(const State& y) const;
  Sample sample_of(const State& y, double t) const;
  void rephase(State& y) const;

  void start_roots(const RationalDerivative& rd, double Q, double t);
  void start_coeffs(const Polynomial& N, const std::vector<PoleEntry>& poles, double Q, double t);
  void reset_stepper(const State& y, double t, double h);
  void advance();
  bool try_step(const State& y_prev, double t_prev);
  void emit_samples_upto(double t_hi);
  double next_stop() const;
  void push_sample(Sample s);
  double sample_time(long i) const { return cfg_.t0 + static_cast<double>(i) * cfg_.sample_dt; }
  State dense(double t) const {
    State y(y_.size());
    stepper_.calc_state(t, y);
    return y;
  }
  double bisect(double lo, double hi, const std::function<bool(const State&, double)>& hit) const;
  void terminate(EventRecord ev, const State& y, double t);
  void begin_collision_window(EventRecord ev);
  void on_underflow(const Error& e);
  void leave_coefficients(const State& y, double t);
  void track_cusp(double t_a, double t_b);
  void log_step(const State& y, double t);

  const RunConfig& cfg_;
  Layout L_;
  Trajectory traj_;
  Representation rep_ = Representation::Roots;
  Dense stepper_{make_dense(1e-12, 1e-9, 0.0)};
  State y_;
  double t_ = 0.0;
  long next_sample_ = 1;
  bool done_ = false;
  bool clamped_ = false;
  double h_pref_ = 0.0;
  std::vector<Complex> labels_;  // zero labels while in coefficient mode
  std::vector<std::pair<double, State>> history_;

  double coeff_until_ = kInf;
  bool pole_drop_mode_ = false;
  bool pole_drop_seen_ = false;
  Complex b_ref_;

  bool in_cusp_ = false;
  int cusp_index_ = -1;
  double cusp_entry_ = 0.0;
  double cusp_min_ = kInf;
  std::size_t cusp_event_slot_ = 0;
};

void Runner::system(const State& y, State& dy, double t) {
  if (rep_ == Representation::Roots)
    roots_rhs(L_, cfg_.q_mode, y, dy, t, &traj_.stats.max_two_form_mismatch);
  else
    coeff_rhs(L_, cfg_.q_mode, y, dy, t);
}

std::vector<Complex> Runner::zeros_of(const State& y) const {
  if (rep_ == Representation::Roots) {
    std::vector<Complex> w(L_.m);
    for (int k = 0; k < L_.m; ++k) w[k] = std::exp(get(y, k));
    return w;
  }
  const auto r = polynomial_roots(unpack_N(L_, y), kRootTrim);
  return labels_.empty() ? r : match_labels(labels_, r);
}

SimState Runner::to_state(const State& y, double t, const std::vector<Complex>& labels) const {
  SimState s;
  s.t = t;
  s.Q = y.back();
  s.rep = rep_;
  if (rep_ == Representation::Roots) {
    const RationalDerivative raw = unpack_roots_raw(L_, y);
    const Complex a1 = leading_coeff_raw(raw);
    s.constraint_residual = std::abs(a1.imag()) / std::abs(a1);
    s.rd = raw.normalized();
    s.q = resolve_q(cfg_.q_mode, t, s.rd);
    return s;
  }
  const Polynomial N = unpack_N(L_, y);
  const auto poles = unpack_coeff_poles(L_, y);
  const Complex a1 = a1_of_numerator(N, poles);
  s.constraint_residual = std::abs(a1.imag()) / std::abs(a1);
  auto roots = polynomial_roots(N, kRootTrim);
  if (!labels.empty()) roots = match_labels(labels, roots);
  std::vector<Complex> finite;
  for (Complex r : roots)
    if (std::isfinite(std::abs(r))) finite.push_back(r);
  s.zeros_at_infinity = L_.m - static_cast<int>(finite.size());
  const Complex lead = N[static_cast<std::size_t>(finite.size())];
  s.rd = RationalDerivative(lead, finite, poles).normalized();
  const Polynomial D = monic_denominator(poles);
  if (cfg_.q_mode.kind == QMode::Kind::UnitGrowth) {
    const auto pn = poisson_numerator(N, D, 1.0);
    s.q = 1.0 / pn.P0();
  } else {
    s.q = resolve_q(cfg_.q_mode, t, s.rd);
  }
  const auto pn = poisson_numerator(N, D, s.q);
  s.mu_total = pn.P0();
  s.A0 = pn.U[L_.m] / N[L_.m];
  return s;
}

Sample Runner::sample_of(const State& y, double t) const {
  const SimState st = to_state(y, t, labels_);
  if (rep_ == Representation::Roots) return make_sample(st, cfg_.taylor_order, traj_.moment_order);
  // Series and moments straight from the numerator, which stays accurate
  // while zeros are clustered or at infinity.
  Sample s;
  s.state = st;
  const Polynomial N = unpack_N(L_, y);
  const auto poles = unpack_coeff_poles(L_, y);
  const Complex rot = std::conj(a1_of_numerator(N, poles)) / std::abs(a1_of_numerator(N, poles));
  const Polynomial Nn = N * rot;
  s.taylor = series_from_numerator(Nn, poles, std::max(cfg_.taylor_order, 1));
  s.moments.Q_accum = st.Q;
  s.moments.M.resize(traj_.moment_order + 1);
  if (poles.empty()) {
    const TaylorSeries ts = series_from_numerator(Nn, poles, L_.m + 1);
    for (int k = 0; k <= traj_.moment_order; ++k) s.moments.M[k] = moments_richardson(ts, k);
    s.moments.N0 = dirichlet_excess(ts);
  } else {
    int n = 0;
    for (const auto& p : poles) n += p.order;
    const TaylorSeries ls = series_from_numerator(Nn, poles, series_length_for(poles, L_.m, n));
    for (int k = 0; k <= traj_.moment_order; ++k) s.moments.M[k] = moments_contour(ls, k);
    s.moments.N0 = dirichlet_excess(ls);
  }
  return s;
}

void Runner::rephase(State& y) const {
  if (rep_ == Representation::Roots) {
    const Complex a1 = leading_coeff_raw(unpack_roots_raw(L_, y));
    y[2 * (L_.m + L_.ell()) + 1] -= std::arg(a1);
    return;
  }
  const Complex a1 = a1_of_numerator(unpack_N(L_, y), unpack_coeff_poles(L_, y));
  const Complex rot = std::conj(a1) / std::abs(a1);
  for (int k = 0; k <= L_.m; ++k) put(y, k, get(y, k) * rot);
}

void Runner::reset_stepper(const State& y, double t, double h) {
  stepper_ = make_dense(cfg_.atol, cfg_.rtol, cfg_.max_step);
  stepper_.initialize(y, t, h);
  y_ = y;
  t_ = t;
}

void Runner::start_roots(const RationalDerivative& rd, double Q, double t) {
  rep_ = Representation::Roots;
  reset_stepper(pack_roots(L_, rd, Q), t, 1e-4);
  history_.clear();
  history_.emplace_back(t_, y_);
  labels_.clear();
  coeff_until_ = kInf;
  pole_drop_mode_ = false;
}

void Runner::start_coeffs(const Polynomial& N, const std::vector<PoleEntry>& poles, double Q,
                          double t) {
  rep_ = Representation::Coefficients;
  reset_stepper(pack_coeffs(L_, N, poles, Q), t, 1e-4);
  history_.clear();
}

void Runner::push_sample(Sample s) {
  if (!traj_.samples.empty() && s.state.t <= traj_.samples.back().state.t) return;
  traj_.samples.push_back(std::move(s));
}

void Runner::emit_samples_upto(double t_hi) {
  const double t_cur = stepper_.current_time();
  const double eps = 1e-12 * std::max(1.0, std::abs(t_cur));
  // steps are clamped to land on sample times; use the step endpoint there
  auto at = [&](double ts) { return std::abs(ts - t_cur) <= eps ? stepper_.current_state() : dense(ts); };
  while (true) {
    double ts = sample_time(next_sample_);
    if (ts > cfg_.t1 + eps) {
      // final sample at t_end when it is off the grid
      if (t_hi >= cfg_.t1 - eps &&
          (traj_.samples.empty() || traj_.samples.back().state.t < cfg_.t1))
        push_sample(sample_of(at(cfg_.t1), cfg_.t1));
      return;
    }
    if (ts > t_hi + eps) return;
    push_sample(sample_of(at(ts), std::min(ts, cfg_.t1)));
    ++next_sample_;
  }
}

double Runner::next_stop() const {
  double target = std::min(sample_time(next_sample_), cfg_.t1);
  if (rep_ == Representation::Coefficients) target = std::min(target, coeff_until_);
  return target;
}

double Runner::bisect(double lo, double hi,
                      const std::function<bool(const State&, double)>& hit) const {
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hit(dense(mid), mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

void Runner::terminate(EventRecord ev, const State& y, double t) {
  push_sample(sample_of(y, t));
  traj_.events.push_back(ev);
  traj_.terminal_event = std::move(ev);
  done_ = true;
}

void Runner::log_step(const State& y, double t) {
  if (!cfg_.log_steps) return;
  StepRecord r;
  r.t = t;
  if (rep_ == Representation::Roots) {
    const RationalDerivative raw = unpack_roots_raw(L_, y);
    r.a1 = std::abs(leading_coeff_raw(raw));
    for (const auto& p : raw.poles()) r.pole_moduli.push_back(std::abs(p.z));
  } else {
    const auto poles = unpack_coeff_poles(L_, y);
    r.a1 = std::abs(a1_of_numerator(unpack_N(L_, y), poles));
    for (const auto& p : poles) r.pole_moduli.push_back(std::abs(p.z));
  }
  traj_.steps.push_back(std::move(r));
}

bool Runner::try_step(const State& y_prev, double t_prev) {
  double h = stepper_.current_time_step();
  for (int attempt = 0;; ++attempt) {
    try {
      stepper_.do_step([this](const State& y, State& dy, double t) { system(y, dy, t); });
      return true;
    } catch (const Error& e) {
      ++traj_.stats.rejected_on_error;
      h *= 0.25;
      if (h < 1e-13 * std::max(1.0, std::abs(t_prev)) || attempt > 60) {
        on_underflow(Error(ErrorKind::StepSizeUnderflow,
                           std::string("step size underflow after: ") + e.what()));
        return false;
      }
      reset_stepper(y_prev, t_prev, h);
    } catch (const std::exception& e) {
      on_underflow(Error(ErrorKind::StepSizeUnderflow, e.what()));
      return false;
    }
  }
}

void Runner::on_underflow(const Error& e) {
  // Classify from the last good state.
  const auto w = zeros_of(y_);
  int i = -1, j = -1, k = -1;
  const double gap = min_zero_gap(w, &i, &j);
  const double mn = min_modulus(w, &k);
  if (rep_ == Representation::Roots && i >= 0 && gap < 1e-3) {
    EventRecord ev{EventKind::Collision, t_, {i, j}, {w[i], w[j]}, {{"gap", gap}},
                   "located by step-size collapse"};
    if (!cfg_.collision_continuation) {
      terminate(ev, y_, t_);
      return;
    }
    begin_collision_window(ev);
    return;
  }
  if (k >= 0 && mn - 1.0 < 1e-3) {
    EventRecord ev{EventKind::Cusp, t_, {k}, {w[k]}, {{"modulus_minus_one", mn - 1.0}},
                   "zero reached the unit circle; no continuation"};
    terminate(ev, y_, t_);
    return;
  }
  throw RunFailure(e, traj_);
}

void Runner::begin_collision_window(EventRecord ev) {
  ev.note = ev.note.empty() ? "labels after continuation matched by minimal total distance"
                            : ev.note + "; labels matched by minimal total distance";
  const double t_ev = ev.time;
  traj_.events.push_back(std::move(ev));
  // restart point: last accepted root-mode state at or before t_ev - window
  std::size_t idx = 0;
  for (std::size_t i = 0; i < history_.size(); ++i)
    if (history_[i].first <= t_ev - cfg_.collision_window) idx = i;
  const double t_r = history_[idx].first;
  const State y_r = history_[idx].second;
  while (!traj_.samples.empty() && traj_.samples.back().state.t > t_r) traj_.samples.pop_back();
  while (!traj_.steps.empty() && traj_.steps.back().t > t_r) traj_.steps.pop_back();
  next_sample_ = static_cast<long>(std::floor((t_r - cfg_.t0) / cfg_.sample_dt)) + 1;
  while (sample_time(next_sample_) <= t_r) ++next_sample_;
  if (in_cusp_ && cusp_entry_ > t_r) in_cusp_ = false;

  const RationalDerivative rd = unpack_roots_raw(L_, y_r).normalized();
  labels_ = rd.zeros();
  coeff_until_ = std::min(t_ev + cfg_.collision_window, cfg_.t1);
  start_coeffs(rd.numerator(), rd.poles(), y_r.back(), t_r);
}

void Runner::leave_coefficients(const State& y, double t) {
  const auto w = zeros_of(y);
  for (Complex z : w)
    if (!std::isfinite(std::abs(z)))
      throw RunFailure(Error(ErrorKind::WindowTooSmall, "zero still at infinity"), traj_);
  const double gap = min_zero_gap(w);
  if (gap < 100.0 * cfg_.events.collision)
    throw RunFailure(Error(ErrorKind::WindowTooSmall,
                           "zeros unresolved after the continuation window (gap " +
                               std::to_string(gap) + ")"),
                     traj_);
  const Polynomial N = unpack_N(L_, y);
  const auto poles = unpack_coeff_poles(L_, y);
  const RationalDerivative rd = RationalDerivative(N[L_.m], w, poles).normalized();
  const double h = clamped_ ? std::max(h_pref_, stepper_.current_time_step())
                            : stepper_.current_time_step();
  start_roots(rd, y.back(), t);
  reset_stepper(y_, t, h);
  history_.clear();
  history_.emplace_back(t_, y_);
}

void Runner::track_cusp(double t_a, double t_b) {
  const int k = cusp_index_;
  auto modulus = [&](double t) { return std::abs(zeros_of(dense(t))[k]); };
  // bracket on a coarse grid, then Brent on the best cell
  constexpr int kGrid = 8;
  int best = 0;
  double best_val = kInf;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = modulus(t_a + (t_b - t_a) * i / kGrid);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double lo = t_a + (t_b - t_a) * std::max(best - 1, 0) / kGrid;
  const double hi = t_a + (t_b - t_a) * std::min(best + 1, kGrid) / kGrid;
  const auto [t_min, v_min] = boost::math::tools::brent_find_minima(modulus, lo, hi, 40);
  if (v_min < cusp_min_) {
    cusp_min_ = v_min;
    auto& ev = traj_.events[cusp_event_slot_];
    ev.time = t_min;
    ev.positions = {zeros_of(dense(t_min))[k]};
    auto it = std::find_if(ev.values.begin(), ev.values.end(),
                           [](const auto& p) { return p.first == "min_modulus_minus_one"; });
    if (it == ev.values.end())
      ev.values.push_back({"min_modulus_minus_one", v_min - 1.0});
    else
      it->second = v_min - 1.0;
  }
  if (modulus(t_b) - 1.0 >= cfg_.events.cusp) {
    const double t_exit = bisect(t_min, t_b, [&](const State& y, double) {
      return std::abs(zeros_of(y)[k]) - 1.0 >= cfg_.events.cusp;
    });
    traj_.events[cusp_event_slot_].values.push_back({"exit_time", t_exit});
    in_cusp_ = false;
  }
}

void Runner::advance() {
  const State y_prev = y_;
  const double t_prev = t_;
  if (!try_step(y_prev, t_prev)) return;
  const double t_old = stepper_.previous_time();
  const double t_cur = stepper_.current_time();
  const double t_hi = std::min(t_cur, cfg_.t1);
  const EventThresholds& thr = cfg_.events;

  // earliest threshold crossing inside (t_old, t_hi]
  double t_ev = kInf;
  EventKind kind = EventKind::Cusp;
  auto consider = [&](EventKind kd, const std::function<bool(const State&, double)>& hit) {
    const State yh = dense(t_hi);
    if (!hit(yh, t_hi)) return;
    const double te = hit(dense(t_old), t_old) ? t_old : bisect(t_old, t_hi, hit);
    if (te < t_ev) {
      t_ev = te;
      kind = kd;
    }
  };
  if (rep_ == Representation::Roots && L_.m >= 2)
    consider(EventKind::Collision,
             [&](const State& y, double) { return min_zero_gap(zeros_of(y)) < thr.collision; });
  if (!in_cusp_ && L_.m >= 1)
    consider(EventKind::Cusp,
             [&](const State& y, double) { return min_modulus(zeros_of(y)) - 1.0 < thr.cusp; });
  int n_total = 0;
  for (int o : L_.orders) n_total += o;
  if (rep_ == Representation::Roots && L_.m == n_total && L_.m >= 1)
    consider(EventKind::Escape,
             [&](const State& y, double) { return max_modulus(zeros_of(y)) > thr.escape; });
  if (rep_ == Representation::Coefficients && pole_drop_mode_ && !pole_drop_seen_)
    consider(EventKind::PoleDrop, [&](const State& y, double) {
      return (get(y, L_.m) * std::conj(b_ref_)).real() <= 0.0;
    });

  if (t_ev < kInf) {
    emit_samples_upto(t_ev);
    const State ye = dense(t_ev);
    const auto w = zeros_of(ye);
    switch (kind) {
      case EventKind::Collision: {
        int i = 0, j = 1;
        const double gap = min_zero_gap(w, &i, &j);
        EventRecord ev{kind, t_ev, {i, j}, {w[i], w[j]}, {{"gap", gap}}, ""};
        if (!cfg_.collision_continuation) {
          terminate(ev, ye, t_ev);
          return;
        }
        begin_collision_window(std::move(ev));
        return;
      }
      case EventKind::Cusp: {
        int k = 0;
        const double mn = min_modulus(w, &k);
        EventRecord ev{kind, t_ev, {k}, {w[k]}, {{"entry_time", t_ev}, {"modulus_minus_one", mn - 1.0}},
                       ""};
        if (!cfg_.cusp_continuation) {
          terminate(ev, ye, t_ev);
          return;
        }
        ev.note = "continued through tangential approach; time is the closest approach";
        traj_.events.push_back(std::move(ev));
        cusp_event_slot_ = traj_.events.size() - 1;
        in_cusp_ = true;
        cusp_index_ = k;
        cusp_entry_ = t_ev;
        cusp_min_ = kInf;
        break;
      }
      case EventKind::Escape: {
        int k = 0;
        const double mx = max_modulus(w, &k);
        EventRecord ev{kind, t_ev, {k}, {w[k]}, {{"modulus", mx}}, ""};
        if (!cfg_.collision_continuation) {
          terminate(ev, ye, t_ev);
          return;
        }
        ev.note = "switched to numerator representation";
        traj_.events.push_back(std::move(ev));
        const RationalDerivative rd = unpack_roots_raw(L_, ye).normalized();
        labels_ = rd.zeros();
        pole_drop_mode_ = true;
        pole_drop_seen_ = false;
        b_ref_ = rd.numerator()[L_.m];
        const double h = stepper_.current_time_step();
        start_coeffs(rd.numerator(), rd.poles(), ye.back(), t_ev);
        reset_stepper(y_, t_ev, h);
        return;
      }
      case EventKind::PoleDrop: {
        int k = 0;
        const auto wl = zeros_of(ye);
        for (std::size_t i = 0; i < wl.size(); ++i)
          if (!std::isfinite(std::abs(wl[i])) || std::abs(wl[i]) > std::abs(wl[k])) k = static_cast<int>(i);
        traj_.events.push_back({kind, t_ev, {k}, {}, {{"leading_coefficient", std::abs(get(ye, L_.m))}},
                                "zero passes through infinity"});
        pole_drop_seen_ = true;
        break;
      }
    }
  }

  if (in_cusp_) track_cusp(std::max(t_old, cusp_entry_), t_hi);

  emit_samples_upto(t_hi);
  State y = stepper_.current_state();
  traj_.stats.max_constraint_residual =
      std::max(traj_.stats.max_constraint_residual, to_state(y, t_cur, labels_).constraint_residual);
  rephase(y);
  ++traj_.stats.accepted;
  if (rep_ == Representation::Coefficients) {
    ++traj_.stats.coefficient_steps;
    labels_ = zeros_of(y);
  }
  log_step(y, t_cur);
  double h = stepper_.current_time_step();
  if (clamped_) h = std::max(h, h_pref_);
  if (t_cur >= cfg_.t1 - 1e-12 * std::max(1.0, std::abs(cfg_.t1))) {
    done_ = true;
    return;
  }

  const double eps = 1e-12 * std::max(1.0, std::abs(t_cur));
  if (rep_ == Representation::Coefficients && t_cur >= coeff_until_ - eps) {
    const State yc = t_cur - coeff_until_ <= eps ? y : dense(coeff_until_);
    labels_ = zeros_of(yc);
    leave_coefficients(yc, coeff_until_);
    return;
  }
  h_pref_ = h;
  const double gap = next_stop() - t_cur;
  clamped_ = gap > 0.0 && gap < h;
  reset_stepper(y, t_cur, clamped_ ? gap : h);
  if (rep_ == Representation::Roots) history_.emplace_back(t_, y_);
  if (rep_ == Representation::Coefficients && pole_drop_mode_ && pole_drop_seen_) {
    const auto w = zeros_of(y);
    bool back = true;
    for (Complex z : w) back = back && std::isfinite(std::abs(z)) && std::abs(z) < thr.escape / 10.0;
    if (back) leave_coefficients(y, t_cur);
  }
}

Trajectory Runner::run() {
  if (!(cfg_.t1 > cfg_.t0)) throw Error(ErrorKind::ConfigError, "t_span must be increasing");
  if (!(cfg_.sample_dt > 0.0)) throw Error(ErrorKind::ConfigError, "sample_dt must be positive");
  if (!(cfg_.rtol > 0.0) || !(cfg_.atol > 0.0))
    throw Error(ErrorKind::ConfigError, "tolerances must be positive");
  const RationalDerivative rd = cfg_.map.normalized();
  if (rd.m() < rd.n()) throw Error(ErrorKind::InvalidArgument, "dynamics requires m >= n");
  if (!is_locally_univalent(rd))
    throw Error(ErrorKind::NonLocallyUnivalent, "initial map is not locally univalent");
  L_.m = rd.m();
  L_.orders = rd.pole_orders();
  traj_.moment_order = rd.m();
  start_roots(rd, 0.0, cfg_.t0);
  push_sample(sample_of(y_, t_));
  next_sample_ = 1;
  while (!done_) advance();
  return std::move(traj_);
}

}  // namespace

Trajectory run_simulation(const RunConfig& cfg) {
  Runner r(cfg);
  return r.run();
}

SimState step(const SimState& state, double h, const QMode& mode, double rtol, double atol) {
  if (h == 0.0) return state;
  Layout L;
  L.m = state.rd.m();
  L.orders = state.rd.pole_orders();
  State y = pack_roots(L, state.rd, state.Q);
  auto stepper = odeint::make_controlled(atol, rtol, Dopri());
  auto sys = [&](const State& x, State& dx, double t) { roots_rhs(L, mode, x, dx, t, nullptr); };
  double t = state.t;
  double dt = h;
  for (int attempt = 0; attempt < 200; ++attempt) {
    if (stepper.try_step(sys, y, t, dt) == odeint::success) {
      SimState out;
      out.t = t;
      const RationalDerivative raw = unpack_roots_raw(L, y);
      const Complex a1 = leading_coeff_raw(raw);
      out.constraint_residual = std::abs(a1.imag()) / std::abs(a1);
      out.rd = raw.normalized();
      out.Q = y.back();
      out.q = resolve_q(mode, t, out.rd);
      return out;
    }
  }
  throw Error(ErrorKind::StepSizeUnderflow, "no acceptable step size found");
}

Trajectory continue_through_collision(const Trajectory& traj, const RunConfig& cfg,
                                      double window) {
  if (!traj.terminal_event || traj.terminal_event->kind != EventKind::Collision) return traj;
  const double t_ev = traj.terminal_event->time;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < traj.samples.size(); ++i)
    if (traj.samples[i].state.t <= t_ev - window) idx = i;
  const Sample& s = traj.samples[idx];
  RunConfig c = cfg;
  c.map = s.state.rd;
  c.t0 = s.state.t;
  c.collision_continuation = true;
  c.collision_window = window;
  Trajectory tail = run_simulation(c);
  Trajectory out;
  out.moment_order = traj.moment_order;
  out.stats = traj.stats;
  for (std::size_t i = 0; i < idx; ++i) out.samples.push_back(traj.samples[i]);
  for (const auto& e : traj.events)
    if (e.time < s.state.t) out.events.push_back(e);
  for (auto smp : tail.samples) {
    smp.state.Q += s.state.Q;
    smp.moments.Q_accum += s.state.Q;
    out.samples.push_back(std::move(smp));
  }
  for (const auto& e : tail.events) out.events.push_back(e);
  out.terminal_event = tail.terminal_event;
  for (const auto& st : traj.steps)
    if (st.t <= s.state.t) out.steps.push_back(st);
  for (const auto& st : tail.steps) out.steps.push_back(st);
  return out;
}

ConservationResidual conservation_residual(const Trajectory& traj) {
  const auto& S = traj.samples;
  if (S.size() < 3) throw Error(ErrorKind::InvalidArgument, "need at least three samples");
  for (std::size_t i = 1; i < S.size(); ++i)
    if (!(S[i].state.t > S[i - 1].state.t))
      throw Error(ErrorKind::InvalidArgument, "sample times must be distinct and increasing");
  ConservationResidual r;
  auto log_ratio = [](const SimState& a, const SimState& b) {
    Complex s{};
    const auto& wa = a.rd.zeros();
    const auto& wb = b.rd.zeros();
    Complex pa = 1.0, pb = 1.0;
    for (std::size_t k = 0; k < wa.size(); ++k) {
      pa *= wa[k];
      pb *= wb[k];
    }
    s += std::log(pb / pa);
    Complex qa = 1.0, qb = 1.0;
    for (std::size_t j = 0; j < a.rd.poles().size(); ++j) {
      for (int o = 0; o < a.rd.poles()[j].order; ++o) {
        qa *= a.rd.poles()[j].z;
        qb *= b.rd.poles()[j].z;
      }
    }
    s -= std::log(qb / qa);
    return s;
  };
  for (std::size_t i = 1; i + 1 < S.size(); ++i) {
    const auto& a = S[i - 1].state;
    const auto& c = S[i].state;
    const auto& b = S[i + 1].state;
    if (a.zeros_at_infinity || b.zeros_at_infinity || c.zeros_at_infinity) continue;
    if (a.rd.m() != b.rd.m()) continue;
    const Complex d = log_ratio(a, b) / (b.t - a.t);
    const int m = c.rd.m(), n = c.rd.n();
    const Complex target = c.mu_total - static_cast<double>(m - n + 1) * c.A0;
    r.t.push_back(c.t);
    r.modulus_residual.push_back(std::abs(d.real() - target.real()));
    r.argument_residual.push_back(std::abs(d.imag() - target.imag()));
    r.max_modulus = std::max(r.max_modulus, r.modulus_residual.back());
    r.max_argument = std::max(r.max_argument, r.argument_residual.back());
  }
  return r;
}

}  // namespace hsflow

#include "hsflow/oracle.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "hsflow/polynomial.hpp"

namespace hsflow::oracle {

namespace odeint = boost::numeric::odeint;

namespace {

fftw_complex* as_fftw(std::vector<Complex>& v) { return reinterpret_cast<fftw_complex*>(v.data()); }

/// f' on the boundary nodes theta_j = 2 pi j / M.
std::vector<Complex> boundary_derivative(const TaylorSeries& s, int M) {
  const int N = s.order();
  if (M < 2 * N) throw Error(ErrorKind::InvalidArgument, "node_count below twice the order");
  std::vector<Complex> buf(static_cast<std::size_t>(M));
  for (int k = 0; k < N; ++k) buf[static_cast<std::size_t>(k)] = double(k + 1) * s.coeffs[static_cast<std::size_t>(k)];
  fftw_plan plan = fftw_plan_dft_1d(M, as_fftw(buf), as_fftw(buf), FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return buf;
}

/// Normalized forward DFT of q / |f'|^2.
std::vector<Complex> boundary_spectrum(const SpectralState& s) {
  const int M = s.node_count;
  std::vector<Complex> u = boundary_derivative(s.coeffs, M);
  double fmin = std::numeric_limits<double>::infinity();
  for (auto& v : u) {
    const double r2 = std::norm(v);
    fmin = std::min(fmin, std::sqrt(r2));
    v = Complex(s.q / r2 / M, 0.0);
  }
  if (!(fmin > kBoundaryFloor))
    throw Error(ErrorKind::BoundaryZero, "min |f'| on the boundary is " + std::to_string(fmin));
  fftw_plan plan = fftw_plan_dft_1d(M, as_fftw(u), as_fftw(u), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return u;
}

void check_state(const SpectralState& s) {
  if (s.coeffs.order() < 1) throw Error(ErrorKind::InvalidArgument, "empty series");
  const Complex a1 = s.coeffs.a(1);
  if (!(a1.real() > 0.0) || std::abs(a1.imag()) > 1e-8 * std::abs(a1))
    throw Error(ErrorKind::ConstraintViolated, "a_1 is not real positive");
}

using State = std::vector<double>;

void pack(const SpectralState& s, State& y) {
  const int N = s.coeffs.order();
  y.assign(static_cast<std::size_t>(2 * N + 1), 0.0);
  for (int k = 0; k < N; ++k) {
    y[static_cast<std::size_t>(2 * k)] = s.coeffs.coeffs[static_cast<std::size_t>(k)].real();
    y[static_cast<std::size_t>(2 * k + 1)] = s.coeffs.coeffs[static_cast<std::size_t>(k)].imag();
  }
  y.back() = s.Q;
}

void unpack(const State& y, SpectralState& s) {
  const int N = static_cast<int>(y.size() - 1) / 2;
  s.coeffs.coeffs.resize(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k)
    s.coeffs.coeffs[static_cast<std::size_t>(k)] =
        Complex(y[static_cast<std::size_t>(2 * k)], y[static_cast<std::size_t>(2 * k + 1)]);
  s.Q = y.back();
}

double resolve(const QMode& mode, const SpectralState& s) {
  switch (mode.kind) {
    case QMode::Kind::UnitGrowth: return unit_growth_q(s);
    case QMode::Kind::Constant: return mode.q;
    case QMode::Kind::Schedule: break;
  }
  throw Error(ErrorKind::ConfigError, "the spectral engine supports unit_growth and constant q");
}

/// Rotate z so that a_1 is real positive again; returns |Im a_1| / |a_1| before.
double rephase(TaylorSeries& s) {
  const Complex a1 = s.a(1);
  const double res = std::abs(a1.imag()) / std::abs(a1);
  const Complex u = std::conj(a1) / std::abs(a1);
  Complex rot = u;
  for (auto& c : s.coeffs) {
    c *= rot;
    rot *= u;
  }
  s.coeffs[0] = Complex(s.coeffs[0].real(), 0.0);
  return res;
}

}  // namespace

SpectralState from_series(const TaylorSeries& series, double t, int N) {
  SpectralState s;
  s.t = t;
  s.coeffs.coeffs.assign(static_cast<std::size_t>(N), Complex{});
  for (int k = 1; k <= std::min(N, series.order()); ++k) s.coeffs.coeffs[static_cast<std::size_t>(k - 1)] = series.a(k);
  s.node_count = 4 * N;
  check_state(s);
  return s;
}

SpectralState from_map(const RationalDerivative& rd, double t, int N) {
  return from_series(taylor_coeffs(rd, N), t, N);
}

double min_boundary_derivative(const SpectralState& s) {
  double fmin = std::numeric_limits<double>::infinity();
  for (Complex v : boundary_derivative(s.coeffs, s.node_count)) fmin = std::min(fmin, std::abs(v));
  return fmin;
}

std::vector<Complex> P_spectral(const SpectralState& s) {
  const int N = s.coeffs.order();
  const std::vector<Complex> u = boundary_spectrum(s);
  std::vector<Complex> p(static_cast<std::size_t>(N));
  p[0] = Complex(u[0].real(), 0.0);
  for (int k = 1; k < N; ++k) p[static_cast<std::size_t>(k)] = 2.0 * u[static_cast<std::size_t>(k)];
  return p;
}

void adapt_nodes(SpectralState& s, double alias_floor, int max_nodes) {
  for (;;) {
    const int M = s.node_count;
    std::vector<Complex> u = boundary_derivative(s.coeffs, M);
    double umax = 0.0;
    for (Complex v : u) umax = std::max(umax, std::abs(s.q) / std::norm(v) / M);
    u = boundary_spectrum(s);
    double top = 0.0;
    for (int k = M / 2 - M / 8; k <= M / 2; ++k) top = std::max(top, std::abs(u[static_cast<std::size_t>(k)]));
    if (top <= alias_floor * umax * M) return;
    if (2 * M > max_nodes)
      throw Error(ErrorKind::UnderResolved, "boundary spectrum unresolved at " + std::to_string(M) + " nodes");
    s.node_count = 2 * M;
  }
}

std::vector<Complex> lk_coefficient_rhs(const SpectralState& s) {
  const int N = s.coeffs.order();
  const std::vector<Complex> p = P_spectral(s);
  std::vector<Complex> g(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) g[static_cast<std::size_t>(k)] = double(k + 1) * s.coeffs.coeffs[static_cast<std::size_t>(k)];
  // coefficient of z^k in z g P is (g P)_{k-1}
  const std::vector<Complex> gp = series_product(g, p, N - 1);
  return gp;
}

double unit_growth_q(const SpectralState& s) {
  SpectralState unit = s;
  unit.q = 1.0;
  return 1.0 / boundary_spectrum(unit)[0].real();
}

double tail_level(const SpectralState& s) {
  const int N = s.coeffs.order();
  double top = 0.0;
  for (int k = N - N / 4; k <= N; ++k) top = std::max(top, std::abs(s.coeffs.a(k)));
  return top / std::abs(s.coeffs.a(1));
}

std::vector<SpectralState> run_oracle(const SpectralState& initial, double t_end, const OracleOptions& opt) {
  if (!(t_end >= initial.t)) throw Error(ErrorKind::ConfigError, "t_end before the initial time");
  if (!(opt.sample_dt > 0.0)) throw Error(ErrorKind::ConfigError, "sample_dt must be positive");
  check_state(initial);
  if (tail_level(initial) > opt.tail_floor)
    throw Error(ErrorKind::UnderResolved, "initial series tail above the spectral floor");

  SpectralState cur = initial;
  cur.q = resolve(opt.q_mode, cur);
  adapt_nodes(cur);

  std::vector<SpectralState> out{cur};
  if (t_end == initial.t) return out;

  auto system = [&](const State& y, State& dy, double) {
    SpectralState s = cur;
    unpack(y, s);
    s.q = resolve(opt.q_mode, s);
    const std::vector<Complex> da = lk_coefficient_rhs(s);
    dy.resize(y.size());
    for (std::size_t k = 0; k < da.size(); ++k) {
      dy[2 * k] = da[k].real();
      dy[2 * k + 1] = da[k].imag();
    }
    dy.back() = s.q;
  };

  using Dopri = odeint::runge_kutta_dopri5<State>;
  auto stepper = odeint::make_controlled<Dopri>(opt.atol, opt.rtol);

  State y;
  pack(cur, y);
  double t = cur.t;
  double dt = std::min(opt.sample_dt, 1e-3);
  long next = 1;
  auto sample_time = [&](long i) { return initial.t + static_cast<double>(i) * opt.sample_dt; };
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));

  while (t < t_end - eps) {
    double stop = std::min(sample_time(next), t_end);
    if (stop - t <= eps) stop = t_end;
    const double dt_try = std::min(dt, stop - t);
    const bool clamped = dt_try < dt;
    State y_try = y;
    double t_try = t;
    double h = dt_try;
    const auto res = stepper.try_step(system, y_try, t_try, h);
    if (res == odeint::fail) {
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw Error(ErrorKind::StepSizeUnderflow, "spectral step underflow at t = " + std::to_string(t));
      dt = h;
      continue;
    }
    if (!clamped) dt = h;
    t = (std::abs(t_try - stop) <= eps) ? stop : t_try;
    y = y_try;
    unpack(y, cur);
    cur.t = t;
    cur.constraint_residual = rephase(cur.coeffs);
    if (tail_level(cur) > opt.tail_floor) {
      const int N = cur.coeffs.order();
      if (2 * N > opt.max_order)
        throw Error(ErrorKind::UnderResolved, "tail above floor at order " + std::to_string(N));
      cur.coeffs.coeffs.resize(static_cast<std::size_t>(2 * N), Complex{});
      cur.node_count = std::max(cur.node_count, 8 * N);
    }
    cur.q = resolve(opt.q_mode, cur);
    adapt_nodes(cur);
    pack(cur, y);
    // the FSAL derivative and the buffer sizes refer to the old state
    stepper = odeint::make_controlled<Dopri>(opt.atol, opt.rtol);
    if (t == stop) {
      out.push_back(cur);
      if (stop < t_end) ++next;
      while (sample_time(next) <= t + eps) ++next;
    }
  }
  return out;
}

std::vector<Complex> series_zeros(const TaylorSeries& s, double trim_tol) {
  std::vector<Complex> g(static_cast<std::size_t>(s.order()));
  for (int k = 1; k <= s.order(); ++k) g[static_cast<std::size_t>(k - 1)] = double(k) * s.a(k);
  return polynomial_roots(Polynomial(std::move(g)), trim_tol);
}

bool CrossReport::pass() const {
  return !points.empty() && max_coeff_diff <= coeff_tolerance && max_zero_diff <= zero_tolerance;
}

CrossReport cross_validate(const Trajectory& traj, const std::vector<SpectralState>& states, double time_tol) {
  CrossReport rep;
  std::size_t j = 0;
  for (const Sample& smp : traj.samples) {
    while (j < states.size() && states[j].t < smp.state.t - time_tol) ++j;
    if (j == states.size()) break;
    if (std::abs(states[j].t - smp.state.t) > time_tol) continue;
    const SpectralState& o = states[j];
    CrossPoint pt;
    pt.t = smp.state.t;
    const int N = o.coeffs.order();
    const TaylorSeries ref = taylor_coeffs(smp.state.rd, N);
    for (int k = 1; k <= N; ++k) pt.coeff_diff = std::max(pt.coeff_diff, std::abs(ref.a(k) - o.coeffs.a(k)));
    std::vector<Complex> roots = series_zeros(o.coeffs);
    // a truncated series only sees zeros inside its disk of convergence
    double radius = std::numeric_limits<double>::infinity();
    for (const PoleEntry& pe : smp.state.rd.poles()) radius = std::min(radius, std::abs(pe.z));
    for (Complex w : smp.state.rd.zeros()) {
      if (std::abs(w) > 0.9 * radius) continue;
      ++rep.zeros_compared;
      double best = std::numeric_limits<double>::infinity();
      std::size_t arg = 0;
      for (std::size_t i = 0; i < roots.size(); ++i)
        if (std::abs(roots[i] - w) < best) {
          best = std::abs(roots[i] - w);
          arg = i;
        }
      if (!roots.empty()) roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(arg));
      pt.zero_diff = std::max(pt.zero_diff, best);
    }
    rep.max_coeff_diff = std::max(rep.max_coeff_diff, pt.coeff_diff);
    rep.max_zero_diff = std::max(rep.max_zero_diff, pt.zero_diff);
    rep.points.push_back(pt);
  }
  return rep;
}

}  // namespace hsflow::oracle

#include "hsflow/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsflow/dynamics.hpp"

namespace hsflow {

namespace {

Complex contour_sum(const std::vector<Complex>& f, const std::vector<Complex>& fp,
                    const std::vector<Complex>& z, int k) {
  Complex acc{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    Complex fk = 1.0;
    for (int j = 0; j < k; ++j) fk *= f[i];
    acc += fk * std::conj(f[i]) * fp[i] * z[i];
  }
  return acc / static_cast<double>(f.size());
}

void check_nodes(int nodes) {
  if (nodes < 512) throw Error(ErrorKind::InvalidArgument, "contour moments need >= 512 nodes");
}

// Recursive enumeration of Richardson tuples with sum(i) <= L.
void richardson_rec(const TaylorSeries& s, int depth, int remaining, int sum, int first,
                    Complex prod, Complex& acc) {
  const int L = s.order();
  if (remaining == 0) {
    acc += static_cast<double>(first) * prod * std::conj(s.a(sum));
    return;
  }
  for (int i = 1; sum + i + (remaining - 1) <= L; ++i) {
    const Complex ai = s.a(i);
    if (ai == Complex{}) continue;
    richardson_rec(s, depth + 1, remaining - 1, sum + i, depth == 0 ? i : first, prod * ai, acc);
  }
}

}  // namespace

Complex moments_contour(const RationalDerivative& rd, int k, int nodes) {
  check_nodes(nodes);
  if (!is_locally_univalent(rd))
    throw Error(ErrorKind::NonLocallyUnivalent, "contour moments need a locally univalent map");
  const LogRationalForm lr = to_log_rational(rd);
  std::vector<Complex> f(nodes), fp(nodes), z(nodes);
  for (int i = 0; i < nodes; ++i) {
    z[i] = std::polar(1.0, 2.0 * kPi * i / nodes);
    f[i] = lr.eval(z[i]);
    fp[i] = eval_g(rd, z[i]);
  }
  return contour_sum(f, fp, z, k);
}

Complex moments_contour(const TaylorSeries& series, int k, int nodes) {
  check_nodes(nodes);
  std::vector<Complex> f(nodes), fp(nodes), z(nodes);
  for (int i = 0; i < nodes; ++i) {
    z[i] = std::polar(1.0, 2.0 * kPi * i / nodes);
    f[i] = series.eval(z[i]);
    fp[i] = series.eval_derivative(z[i]);
  }
  return contour_sum(f, fp, z, k);
}

Complex moments_richardson(const TaylorSeries& series, int k, std::uint64_t budget) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "moment index must be >= 0");
  const int L = series.order();
  double count = 1.0;
  for (int i = 0; i <= k; ++i) count *= L;
  if (count > static_cast<double>(budget))
    throw Error(ErrorKind::TupleBlowup, "Richardson enumeration over budget (" +
                                            std::to_string(L) + "^" + std::to_string(k + 1) + ")");
  Complex acc{};
  richardson_rec(series, 0, k + 1, 0, 0, 1.0, acc);
  return acc;
}

double dirichlet_excess(const TaylorSeries& series) {
  double s = 0.0;
  for (int j = series.order(); j >= 2; --j) s += j * std::norm(series.a(j));
  return s;
}

TaylorSeries long_series(const RationalDerivative& rd, int max_order) {
  if (rd.is_polynomial()) return taylor_coeffs(rd, rd.m() + 1);
  double rho = std::numeric_limits<double>::infinity();
  for (const auto& p : rd.poles()) rho = std::min(rho, std::abs(p.z));
  if (!(rho > 1.0)) throw Error(ErrorKind::PoleInsideDisk, "pole in the closed unit disk");
  const double L = 42.0 / std::log(rho) + 2.0 * (rd.m() + rd.n()) + 16.0;
  return taylor_coeffs(rd, static_cast<int>(std::min<double>(L, max_order)));
}

TaylorSeries series_from_numerator(const Polynomial& N, const std::vector<PoleEntry>& poles,
                                   int order) {
  std::vector<Complex> pts;
  std::vector<int> ord;
  Complex scale = 1.0;
  for (const auto& p : poles) {
    pts.push_back(p.z);
    ord.push_back(p.order);
    for (int k = 0; k < p.order; ++k) scale /= -p.z;
  }
  const auto inv = inverse_product_series(pts, ord, order - 1);
  auto g = series_product(N.coeffs(), inv, order - 1);
  TaylorSeries ts;
  ts.coeffs.resize(order);
  for (int k = 0; k < order; ++k) ts.coeffs[k] = scale * g[k] / static_cast<double>(k + 1);
  return ts;
}

MomentVector moment_vector(const RationalDerivative& rd, int K, double Q) {
  MomentVector mv;
  mv.Q_accum = Q;
  mv.M.resize(K + 1);
  if (rd.is_polynomial()) {
    const TaylorSeries ts = taylor_coeffs(rd, rd.m() + 1);
    for (int k = 0; k <= K; ++k) mv.M[k] = moments_richardson(ts, k);
    mv.N0 = dirichlet_excess(ts);
    return mv;
  }
  const TaylorSeries ls = long_series(rd);
  bool done = false;
  try {
    for (int k = 0; k <= K; ++k) mv.M[k] = moments_contour(rd, k);
    done = true;
  } catch (const Error&) {
  }
  if (!done)
    for (int k = 0; k <= K; ++k) mv.M[k] = moments_contour(ls, k);
  mv.N0 = dirichlet_excess(ls);
  return mv;
}

bool MomentReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const MomentCheck& c) { return c.pass; });
}

MomentReport trajectory_moment_report(const Trajectory& traj, const MomentTolerances& tol) {
  if (traj.samples.size() < 3)
    throw Error(ErrorKind::InvalidArgument, "moment report needs at least three samples");
  MomentReport rep;
  const auto& s0 = traj.samples.front();
  const int K = static_cast<int>(s0.moments.M.size()) - 1;
  const double M00 = s0.moments.M[0].real();
  const double N00 = s0.moments.N0;
  const double a10 = s0.taylor.a(1).real();

  auto finish = [&](MomentCheck c) {
    for (double v : c.series) c.max_residual = std::max(c.max_residual, v);
    c.pass = c.max_residual <= c.tolerance;
    rep.checks.push_back(std::move(c));
  };

  for (int k = 1; k <= K; ++k) {
    MomentCheck c{"M" + std::to_string(k) + "_conservation", true, 0.0,
                  tol.conservation * (1.0 + std::abs(s0.moments.M[k])), {}};
    for (const auto& s : traj.samples) c.series.push_back(std::abs(s.moments.M[k] - s0.moments.M[k]));
    finish(std::move(c));
  }
  {
    // relative to the current mass, which grows without bound
    MomentCheck c{"M0_mass", true, 0.0, tol.mass, {}};
    for (const auto& s : traj.samples) {
      const double M0 = s.moments.M[0].real();
      c.series.push_back(std::abs(M0 - M00 - 2.0 * s.state.Q) / std::max(1.0, M0));
    }
    finish(std::move(c));
  }
  {
    MomentCheck c{"N0_nonincreasing", true, 0.0, tol.monotone, {0.0}};
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
      c.series.push_back(std::max(0.0, traj.samples[i].moments.N0 - traj.samples[i - 1].moments.N0));
    finish(std::move(c));
  }
  {
    MomentCheck c{"a1_squared_lower_bound", true, 0.0, tol.inequality, {}};
    for (const auto& s : traj.samples) {
      const double a1 = s.taylor.a(1).real();
      c.series.push_back(std::max(0.0, a10 * a10 + 2.0 * s.state.Q - a1 * a1) /
                         std::max(1.0, a1 * a1));
    }
    finish(std::move(c));
  }
  {
    MomentCheck c{"coefficient_bound", true, 0.0, tol.inequality, {}};
    for (const auto& s : traj.samples) {
      double worst = 0.0;
      for (int k = 2; k <= s.taylor.order(); ++k)
        worst = std::max(worst, std::abs(s.taylor.a(k)) - std::sqrt(N00 / k));
      c.series.push_back(std::max(0.0, worst));
    }
    finish(std::move(c));
  }
  {
    MomentCheck c{"normalized_radius_nondecreasing", true, 0.0, tol.inequality, {0.0}};
    double prev = a10 / std::sqrt(M00);
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
      const auto& s = traj.samples[i];
      const double r = s.taylor.a(1).real() / std::sqrt(M00 + 2.0 * s.state.Q);
      c.series.push_back(std::max({0.0, prev - r, r - 1.0}));
      prev = r;
    }
    finish(std::move(c));
  }
  return rep;
}

}  // namespace hsflow

#include "hsflow/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "hsflow/gallery.hpp"
#include "hsflow/moments.hpp"

namespace hsflow::asymptotics {

AsymptoticTargets targets(const std::vector<Complex>& M, int m, double zero_tol) {
  AsymptoticTargets tg;
  tg.m = m;
  const double scale = M.empty() ? 1.0 : std::max(1.0, std::abs(M[0]));
  for (int k = 1; k < static_cast<int>(M.size()); ++k)
    if (std::abs(M[k]) > zero_tol * scale) {
      tg.r_gap = k;
      break;
    }
  if (m >= 1 && m < static_cast<int>(M.size()) && std::abs(M[m]) > 0.0) {
    const Complex c = -1.0 / (static_cast<double>(m + 1) * std::conj(M[m]));
    const Complex root = std::pow(c, 1.0 / m);
    for (int k = 0; k < m; ++k) tg.omega_hat.push_back(root * std::polar(1.0, 2.0 * kPi * k / m));
    tg.conserved_product = (m % 2 == 0 ? 1.0 : -1.0) / (static_cast<double>(m + 1) * std::conj(M[m]));
  }
  return tg;
}

std::vector<Complex> rescaled_zeros(const SimState& state) {
  const auto& rd = state.rd;
  if (!rd.is_polynomial() || rd.m() < 1)
    throw Error(ErrorKind::RegimeMismatch, "rescaled zeros need a polynomial map with m >= 1");
  const double a1 = leading_coeff(rd);
  const double s = std::pow(a1, -static_cast<double>(rd.m() + 2) / rd.m());
  std::vector<Complex> out;
  for (Complex w : rd.zeros()) out.push_back(w * s);
  return out;
}

LogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  LogFit f;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++f.points;
  }
  if (f.points < 2) return f;
  const double n = f.points;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

namespace {

std::vector<int> assign(const std::vector<Complex>& hat, const std::vector<Complex>& tilde) {
  const auto matched = match_labels(hat, tilde);
  std::vector<int> idx(hat.size(), -1);
  for (std::size_t i = 0; i < matched.size(); ++i)
    for (std::size_t j = 0; j < tilde.size(); ++j)
      if (matched[i] == tilde[j]) idx[i] = static_cast<int>(j);
  return idx;
}

// log-log interpolation of y(x) at x0; NaN when x0 is outside the samples.
double interp(const std::vector<double>& x, const std::vector<double>& y, double x0) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i - 1] <= x0 && x0 <= x[i]) {
      if (!(y[i - 1] > 0.0) || !(y[i] > 0.0)) return std::max(y[i - 1], y[i]);
      const double u = std::log(x0 / x[i - 1]) / std::log(x[i] / x[i - 1]);
      return std::exp((1.0 - u) * std::log(y[i - 1]) + u * std::log(y[i]));
    }
  }
  return std::nan("");
}

template <class T>
std::vector<T> second_half(const std::vector<T>& v) {
  return std::vector<T>(v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
}

}  // namespace

bool ConvergenceReport::pass() const {
  bool ok = matching_stable && mismatch_decreasing && r_bound_ok &&
            max_product_residual <= 1e-8;
  for (const auto& d : decades) ok = ok && d.pass;
  return ok;
}

ConvergenceReport convergence_report(const Trajectory& traj, const ConvergenceOptions& opt) {
  ConvergenceReport rep;
  if (traj.samples.empty()) return rep;
  const auto& first = traj.samples.front();
  const int m = first.state.rd.m();
  const bool poly = first.state.rd.is_polynomial();
  rep.targets = targets(first.moments.M, m);
  const int r = rep.targets.r_gap;

  int ell_limit = m;
  if (!poly) {
    const auto lr = to_log_rational(first.state.rd);
    bool logs = false;
    for (Complex e : lr.residues) logs = logs || std::abs(e) > 1e-12;
    if (!logs) ell_limit = m - first.state.rd.ell();
  }
  rep.r_bound_ok = r <= ell_limit;

  const int kmax = std::min(m + 1, static_cast<int>(first.moments.M.size()));
  for (const auto& s : traj.samples) {
    if (s.state.zeros_at_infinity) continue;
    const double a1 = s.taylor.a(1).real();
    rep.t.push_back(s.state.t);
    rep.a1.push_back(a1);
    std::vector<double> res, scaled;
    for (int k = 2; k <= kmax; ++k) {
      const Complex ak = s.taylor.a(k);
      const double v = std::abs(ak * std::pow(a1, k) - std::conj(s.moments.M[k - 1]));
      res.push_back(v);
      scaled.push_back(v * std::pow(a1, 4));
    }
    rep.decay_residual.push_back(res);
    rep.decay_scaled.push_back(scaled);
    std::vector<double> gap;
    for (int k = 2; k <= r; ++k) gap.push_back(std::abs(s.taylor.a(k)) * std::pow(a1, r + 1));
    rep.gap_residual.push_back(gap);

    if (poly && m >= 1 && !rep.targets.omega_hat.empty()) {
      const auto tilde = rescaled_zeros(s.state);
      const auto idx = assign(rep.targets.omega_hat, tilde);
      double worst = 0.0;
      Complex prod = 1.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        worst = std::max(worst, std::abs(tilde[idx[i]] - rep.targets.omega_hat[i]));
        prod *= tilde[i];
      }
      rep.zero_mismatch.push_back(worst);
      rep.assignment.push_back(idx);
      const double pr = std::abs(prod - rep.targets.conserved_product) /
                        std::abs(rep.targets.conserved_product);
      rep.product_residual.push_back(pr);
      rep.max_product_residual = std::max(rep.max_product_residual, pr);
    }
  }
  if (!rep.zero_mismatch.empty()) {
    rep.final_mismatch = rep.zero_mismatch.back();
    const std::size_t n = rep.assignment.size();
    for (std::size_t i = n - n / 4; i < n; ++i)
      rep.matching_stable = rep.matching_stable && rep.assignment[i] == rep.assignment.back();
    const std::size_t from = n > 10 ? n - 10 : 0;
    for (std::size_t i = from + 1; i < n; ++i)
      rep.mismatch_decreasing = rep.mismatch_decreasing &&
                                rep.zero_mismatch[i] <= rep.zero_mismatch[i - 1] * (1.0 + 1e-9) + 1e-13;
  }

  const auto a1_half = second_half(rep.a1);
  for (int k = 2; k <= kmax; ++k) {
    std::vector<double> series;
    for (const auto& row : rep.decay_residual) series.push_back(row[k - 2]);
    rep.decay_fits.push_back(fit_loglog(a1_half, second_half(series)));
    if (rep.a1.empty() || rep.a1.back() < opt.decade_hi || rep.a1.front() > opt.decade_lo) continue;
    DecayDecade d;
    d.k = k;
    d.residual_lo = interp(rep.a1, series, opt.decade_lo);
    d.residual_hi = interp(rep.a1, series, opt.decade_hi);
    const double floor = opt.roundoff_floor * (1.0 + std::abs(first.moments.M[k - 1]));
    d.at_floor = d.residual_lo <= floor;
    d.pass = d.at_floor || d.residual_hi <= floor || d.residual_lo >= opt.decade_factor * d.residual_hi;
    rep.decades.push_back(d);
  }
  return rep;
}

std::pair<double, double> pole_envelope(double r, double a1) {
  return {(r + 1.0 / r - 2.0) / a1, (r + 1.0 / r + 2.0) / a1};
}

EnvelopeReport pole_envelope_check(const Trajectory& traj, double tol) {
  if (traj.samples.empty() || traj.samples.front().state.rd.is_polynomial())
    throw Error(ErrorKind::RegimeMismatch, "pole envelope needs a rational run");
  EnvelopeReport rep;
  const auto& s0 = traj.samples.front();
  const double a10 = s0.taylor.a(1).real();
  for (const auto& p : s0.state.rd.poles()) {
    const auto [lo, hi] = pole_envelope(std::abs(p.z), a10);
    rep.lower.push_back(lo);
    rep.upper.push_back(hi);
  }
  for (const auto& s : traj.samples) {
    const double a1 = s.taylor.a(1).real();
    std::vector<double> row;
    const auto& poles = s.state.rd.poles();
    for (std::size_t j = 0; j < poles.size() && j < rep.lower.size(); ++j) {
      const double v = std::abs(poles[j].z) / a1;
      row.push_back(v);
      const double viol = std::max({0.0, (rep.lower[j] - v) / rep.lower[j], (v - rep.upper[j]) / rep.upper[j]});
      rep.worst_violation = std::max(rep.worst_violation, viol);
    }
    rep.t.push_back(s.state.t);
    rep.ratio.push_back(row);
  }
  rep.pass = rep.worst_violation <= tol;
  return rep;
}

bool ScalingReport::pass() const {
  bool ok = gap_decreasing;
  for (const auto& f : families) ok = ok && f.pass;
  return ok;
}

ScalingReport coefficient_scaling_check(const Trajectory& traj, const ScalingOptions& opt) {
  ScalingReport rep;
  rep.truncation_orders = opt.truncation_orders;
  if (traj.samples.size() < 2) return rep;

  const auto& s0 = traj.samples.front();
  const auto lr0 = to_log_rational(s0.state.rd);
  const int n = s0.state.rd.n();
  const int m = s0.state.rd.m();
  const int n_c = static_cast<int>(lr0.denominator.size()) - 1;  // n - ell
  const int n_b = static_cast<int>(lr0.numerator.size());        // m - ell + 1

  std::vector<ScalingFamily> fam;
  auto add = [&](std::string name, std::string kind) {
    fam.push_back({std::move(name), std::move(kind), {}, {}, true});
    return fam.size() - 1;
  };
  std::vector<std::size_t> c_idx, ct_idx, b_idx, bt_idx;
  for (int j = 1; j <= n_c; ++j) c_idx.push_back(add("c" + std::to_string(j) + "*a1^" + std::to_string(j), j == n_c ? "comparable" : "bounded"));
  for (int j = 1; j <= n; ++j) ct_idx.push_back(add("ct" + std::to_string(j) + "*a1^" + std::to_string(j), j == n ? "comparable" : "bounded"));
  for (int j = 1; j <= n_b; ++j) b_idx.push_back(add(j == 1 ? "b1/a1" : "b" + std::to_string(j), j == 1 ? "comparable" : "bounded"));
  for (int j = 0; j <= m; ++j) bt_idx.push_back(add(j == 0 ? "bt0/a1" : "bt" + std::to_string(j), j == 0 ? "comparable" : "bounded"));

  const int K = opt.boundary_nodes;
  std::vector<std::vector<double>> trunc_f(opt.truncation_orders.size()), trunc_fp(opt.truncation_orders.size());
  std::vector<double> a1s;
  const double M00 = s0.moments.M[0].real();
  const int r = targets(s0.moments.M, m).r_gap;
  const Complex Mr = r > 0 && r < static_cast<int>(s0.moments.M.size()) ? s0.moments.M[r] : Complex{};

  for (const auto& s : traj.samples) {
    if (s.state.zeros_at_infinity) continue;
    const double a1 = s.taylor.a(1).real();
    a1s.push_back(a1);
    const auto lr = to_log_rational(s.state.rd);
    for (int j = 1; j <= n_c; ++j) fam[c_idx[j - 1]].values.push_back(std::abs(lr.denominator.at(j)) * std::pow(a1, j));
    for (int j = 1; j <= n; ++j) fam[ct_idx[j - 1]].values.push_back(std::abs(lr.g_denominator.at(j)) * std::pow(a1, j));
    for (int j = 1; j <= n_b; ++j) {
      const double v = std::abs(lr.numerator.at(j - 1));
      fam[b_idx[j - 1]].values.push_back(j == 1 ? v / a1 : v);
    }
    for (int j = 0; j <= m; ++j) {
      const double v = std::abs(lr.g_numerator.at(j));
      fam[bt_idx[j]].values.push_back(j == 0 ? v / a1 : v);
    }

    const TaylorSeries ls = long_series(s.state.rd);
    for (std::size_t i = 0; i < opt.truncation_orders.size(); ++i) {
      const int N = opt.truncation_orders[i];
      double ef = 0.0, efp = 0.0;
      for (int q = 0; q < K; ++q) {
        const Complex z = std::polar(1.0, 2.0 * kPi * q / K);
        Complex tf{}, tfp{};
        Complex zp = std::pow(z, N);
        for (int j = N + 1; j <= ls.order(); ++j) {
          tfp += static_cast<double>(j) * ls.a(j) * zp;
          zp *= z;
          tf += ls.a(j) * zp;
        }
        ef = std::max(ef, std::abs(tf));
        efp = std::max(efp, std::abs(tfp));
      }
      trunc_f[i].push_back(ef);
      trunc_fp[i].push_back(efp);
    }

    if (r > 0 && s.state.Q > 0.0) {
      const double sq = std::sqrt(2.0 * s.state.Q);
      // a_1 - sqrt(2Q + M_0(0)) = -N_0 / (a_1 + sqrt(2Q + M_0(0))); the direct
      // difference loses all digits once a_1 is large
      const double lin_gap = -s.moments.N0 / (a1 + std::sqrt(2.0 * s.state.Q + M00));
      const double scale = std::pow(sq, r + 1);
      double worst = 0.0;
      for (int q = 0; q < K; ++q) {
        const Complex z = std::polar(1.0, 2.0 * kPi * q / K);
        Complex tail{}, zp = z;
        for (int j = 2; j <= ls.order(); ++j) {
          zp *= z;
          tail += ls.a(j) * zp;
        }
        const Complex v = (tail + lin_gap * z) * scale - std::conj(Mr) * std::pow(z, r + 1);
        worst = std::max(worst, std::abs(v));
      }
      rep.gap_sup.push_back(worst);
    } else if (r > 0) {
      rep.gap_sup.push_back(0.0);
    }
  }

  const auto a1_half = second_half(a1s);
  for (auto& f : fam) {
    f.fit = fit_loglog(a1_half, second_half(f.values));
    if (f.fit.points >= 2)
      f.pass = f.kind == "bounded" ? f.fit.slope <= opt.slope_tolerance
                                   : std::abs(f.fit.slope) <= opt.slope_tolerance;
  }
  rep.families = std::move(fam);
  for (std::size_t i = 0; i < opt.truncation_orders.size(); ++i) {
    rep.s_N_f.push_back(-fit_loglog(a1_half, second_half(trunc_f[i])).slope);
    rep.s_N_fprime.push_back(-fit_loglog(a1_half, second_half(trunc_fp[i])).slope);
  }
  if (!rep.gap_sup.empty()) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < rep.gap_sup.size(); ++i)
      if (rep.gap_sup[i] > 0.0) {
        x.push_back(a1s[i]);
        y.push_back(rep.gap_sup[i]);
      }
    rep.gap_fit = fit_loglog(second_half(x), second_half(y));
    rep.gap_decreasing = rep.gap_fit.points < 2 || rep.gap_fit.slope < 0.0;
  }
  return rep;
}

bool RepulsionReport::pass() const {
  return std::all_of(predicates.begin(), predicates.end(), [](const auto& p) { return p.second; });
}

RepulsionReport repulsion_predicates(const SimState& state, const RepulsionOptions& opt) {
  const auto& rd = state.rd;
  const double q = state.q != 0.0 ? state.q : 1.0;
  RepulsionReport rep;
  const auto& w = rd.zeros();
  auto real_gt1 = [](Complex z) { return std::abs(z.imag()) <= 1e-12 * std::abs(z) && z.real() > 1.0; };

  if (rd.is_polynomial() && rd.m() == 2 && real_gt1(w[0]) && real_gt1(w[1]) && w[0] != w[1]) {
    rep.regime = "two_real";
    const int i1 = w[0].real() < w[1].real() ? 0 : 1;
    const double w1 = w[i1].real(), w2 = w[1 - i1].real();
    const Derivatives d = rhs(rd, q);
    const double r1 = (d.omega_dot[i1] / w[i1]).real();
    const double r2 = (d.omega_dot[1 - i1] / w[1 - i1]).real();
    const double product_rate = w1 * w2 * (r1 + r2);
    const double ratio_rate = (w2 / w1) * (r2 - r1);
    const auto f = gallery::two_real_roots_fields(w1, w2);
    const double s = std::norm(rd.b()) / q;
    rep.values = {{"alpha", f.alpha}, {"beta", f.beta}, {"product_rate", product_rate},
                  {"ratio_rate", ratio_rate}};
    rep.predicates.push_back({"product_increases", product_rate > 0.0});
    const double p3 = w1 * w2 - 3.0;
    const double tol = 1e-12 * (std::abs(r1) + std::abs(r2)) * (w2 / w1);
    const int expected = std::abs(p3) <= 1e-12 ? 0 : (p3 > 0.0 ? -1 : 1);
    const int got = std::abs(ratio_rate) <= tol ? 0 : (ratio_rate > 0.0 ? 1 : -1);
    rep.predicates.push_back({"ratio_sign_matches_product_threshold", got == expected});
    rep.predicates.push_back({"fields_match_dynamics",
                              std::abs(s * r1 - f.rate1) <= 1e-9 * (1.0 + std::abs(f.rate1)) &&
                                  std::abs(s * r2 - f.rate2) <= 1e-9 * (1.0 + std::abs(f.rate2))});
    return rep;
  }

  if (rd.is_polynomial() && rd.m() >= 2) {
    int close = -1, count = 0;
    for (int k = 0; k < rd.m(); ++k)
      if (std::abs(w[k]) > 1.0 && std::abs(w[k]) < 1.0 + opt.close_eps) {
        close = k;
        ++count;
      }
    bool separated = true;
    for (int i = 0; i < rd.m(); ++i)
      for (int j = i + 1; j < rd.m(); ++j) separated = separated && std::abs(w[i] - w[j]) >= opt.separation;
    if (count == 1 && separated) {
      rep.regime = "one_close";
      const Derivatives d = rhs(rd, q);
      const double rate = (d.omega_dot[close] / w[close]).real();
      double prod = 1.0;
      for (int j = 0; j < rd.m(); ++j)
        if (j != close) prod *= std::norm(w[close] - w[j]);
      const double approx = 3.0 * q / (std::norm(rd.b()) * (std::norm(w[close]) - 1.0) * prod);
      rep.values = {{"log_modulus_rate", rate}, {"approximation", approx}};
      rep.predicates.push_back({"close_zero_moves_out", q > 0.0 ? rate > 0.0 : rate < 0.0});
      return rep;
    }
  }
  throw Error(ErrorKind::RegimeMismatch,
              "state is neither a two-real-zero nor a single-close-zero configuration");
}

}  // namespace hsflow::asymptotics

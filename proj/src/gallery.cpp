#include "hsflow/gallery.hpp"

#include <cmath>

#include "hsflow/poisson.hpp"

namespace hsflow::gallery {

double huntingford_t0() { return 0.25 * std::log(3.0 / 5.0); }

TaylorSeries huntingford_coeffs(double t) {
  if (t < huntingford_t0() - 1e-15)
    throw Error(ErrorKind::OutOfDomain, "Huntingford map is not locally univalent before t0");
  const double e = std::exp(t);
  TaylorSeries ts;
  ts.coeffs = {e, kHuntingfordM1 / (e * e + 3.0 * kHuntingfordM2 / (e * e)),
               kHuntingfordM2 / (e * e * e)};
  return ts;
}

RationalDerivative huntingford_map(double t) {
  const TaylorSeries ts = huntingford_coeffs(t);
  const double a1 = ts.a(1).real(), a2 = ts.a(2).real(), a3 = ts.a(3).real();
  // g = a1 + 2 a2 z + 3 a3 z^2
  const auto roots = polynomial_roots(Polynomial({a1, 2.0 * a2, 3.0 * a3}));
  return RationalDerivative(3.0 * a3, roots);
}

double huntingford_q(double t) {
  const double e = std::exp(t);
  const double den = e * e + 3.0 * kHuntingfordM2 / (e * e);
  const double a1 = e, a2 = kHuntingfordM1 / den, a3 = kHuntingfordM2 / (e * e * e);
  const double da1 = e;
  const double da2 = -kHuntingfordM1 * (2.0 * e * e - 6.0 * kHuntingfordM2 / (e * e)) / (den * den);
  const double da3 = -3.0 * a3;
  return a1 * da1 + 2.0 * a2 * da2 + 3.0 * a3 * da3;
}

OffCenterParams offcenter_params(double t) {
  if (!(t > 1.0) || !std::isfinite(t) || t == 2.0)
    throw Error(ErrorKind::OutOfDomain, "off-center disk needs 1 < t, t != 2");
  const double s = std::sqrt((t * t - 1.0) * (t * t - 1.0) + 16.0);
  OffCenterParams p;
  p.a = 1.0 / t + (t * t - 1.0) * (t * t + 1.0 + s) / (2.0 * t * (t * t - 4.0));
  p.b = 0.5 * t * (t * t + 1.0 - s);
  return p;
}

RationalDerivative offcenter_disk_map(double t) {
  if (t == 2.0) return RationalDerivative(6.0, {}, {{2.0, 2}});
  const OffCenterParams p = offcenter_params(t);
  const auto roots = polynomial_roots(Polynomial({t * p.a, -2.0 * t, 1.0}));
  return RationalDerivative(p.b, roots, {{t, 2}});
}

Complex offcenter_f(double t, Complex z) {
  if (t == 2.0) return 3.0 * z / (2.0 - z);
  const OffCenterParams p = offcenter_params(t);
  return p.b * z * (z - p.a) / (z - t);
}

namespace {

// P*(p) at q = 1 for the single pole p, via the polynomial route.
double pole_speed_factor(const RationalDerivative& rd) {
  const Complex p = rd.poles().at(0).z;
  const auto pn = poisson_numerator(rd.numerator(), rd.denominator(), 1.0);
  return (p * pn.P_star(p)).real();
}

}  // namespace

double offcenter_q(double t) {
  // f = 3z / (2 - z): P = q (33 - 40 z + 8 z^2) / 36, so p P*(p) = 5q/6 at p = 2
  if (t == 2.0) return 1.2;
  return 1.0 / pole_speed_factor(offcenter_disk_map(t));
}

QMode offcenter_q_mode() {
  return QMode::scheduled(
      [](double, const RationalDerivative& rd) { return 1.0 / pole_speed_factor(rd); });
}

TwoRealRootsFields two_real_roots_fields(double w1, double w2) {
  if (!(w1 > 1.0) || !(w2 > w1))
    throw Error(ErrorKind::OutOfDomain, "need 1 < w1 < w2");
  TwoRealRootsFields r;
  const double den = (w1 * w1 - 1.0) * (w2 * w2 - 1.0) * (w1 * w2 - 1.0);
  r.alpha = 2.0 * (1.0 + w1 * w2) / den;
  r.beta = (w1 + w2) / den;
  const double c = (w1 * w2 - 3.0) / (w2 - w1);
  r.rate1 = r.alpha + r.beta * c;
  r.rate2 = r.alpha - r.beta * c;
  r.product_rate_sign = (r.rate1 + r.rate2 > 0.0) - (r.rate1 + r.rate2 < 0.0);
  const double ratio = r.rate2 - r.rate1;
  r.ratio_rate_sign = w1 * w2 == 3.0 ? 0 : (ratio > 0.0) - (ratio < 0.0);
  return r;
}

CardioidReference cardioid_reference(double w, double b, double q) {
  CardioidReference r;
  r.A1 = q * w / (b * b * (1.0 - w * w));
  r.A0 = r.A1 / w;
  r.log_rate = -3.0 * r.A0;
  return r;
}

namespace {

struct Closed {
  std::function<Complex(double, Complex)> f;
  std::function<Complex(double, Complex)> fp;
  std::function<double(double)> q;
};

Closed closed_form(const std::string& name) {
  if (name == "huntingford") {
    auto f = [](double t, Complex z) { return huntingford_coeffs(t).eval(z); };
    auto fp = [](double t, Complex z) { return huntingford_coeffs(t).eval_derivative(z); };
    return {f, fp, huntingford_q};
  }
  if (name == "offcenter") {
    auto fp = [](double t, Complex z) { return eval_g(offcenter_disk_map(t), z); };
    return {offcenter_f, fp, offcenter_q};
  }
  if (name == "cardioid")
    throw Error(ErrorKind::InvalidArgument, "cardioid has no closed-form time dependence");
  throw Error(ErrorKind::UnknownEntry, "unknown gallery entry '" + name + "'");
}

}  // namespace

double boundary_relation_residual(const std::string& name, double t, int nodes, double h) {
  const Closed c = closed_form(name);
  const double q = c.q(t);
  double worst = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const Complex z = std::polar(1.0, 2.0 * kPi * (i + 0.5) / nodes);
    const Complex ft = (c.f(t + h, z) - c.f(t - h, z)) / (2.0 * h);
    worst = std::max(worst, std::abs((ft * std::conj(z * c.fp(t, z))).real() - q));
  }
  return worst;
}

const std::vector<GalleryEntry>& entries() {
  static const std::vector<GalleryEntry> list = {
      {"huntingford",
       "real cubic with M1 = 32/25, M2 = 1/5 and a_1 = e^t; defined for t >= t0 = log(3/5)/4",
       huntingford_t0(),
       INFINITY,
       {{"t0", huntingford_t0()}, {"cusp", 0.0}}},
      {"offcenter",
       "off-center injection into a disk, pole at z = t; defined for 1 < t, disk of radius 2 at t = 2",
       1.0,
       INFINITY,
       {{"pole_drop", 2.0}}},
      {"cardioid", "g = -(z - 2): a single zero at 2, static reference state", 0.0, 0.0, {}},
  };
  return list;
}

GalleryState evaluate(const std::string& name, double t) {
  GalleryState s;
  s.name = name;
  s.t = t;
  if (name == "huntingford") {
    s.taylor = huntingford_coeffs(t);
    s.rd = huntingford_map(t);
    s.q = huntingford_q(t);
  } else if (name == "offcenter") {
    s.rd = offcenter_disk_map(t);
    s.q = offcenter_q(t);
  } else if (name == "cardioid") {
    s.rd = RationalDerivative(-1.0, {2.0});
    s.taylor = taylor_coeffs(s.rd, 2);
    s.q = q_for_unit_growth(s.rd);
  } else {
    throw Error(ErrorKind::UnknownEntry, "unknown gallery entry '" + name + "'");
  }
  return s;
}

}  // namespace hsflow::gallery

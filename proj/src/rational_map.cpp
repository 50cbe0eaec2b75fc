#include "hsflow/rational_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hsflow {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::PoleHit: return "PoleHit";
    case ErrorKind::PathBlocked: return "PathBlocked";
    case ErrorKind::PoleInsideDisk: return "PoleInsideDisk";
    case ErrorKind::ConstraintViolated: return "ConstraintViolated";
    case ErrorKind::DegenerateDecomposition: return "DegenerateDecomposition";
    case ErrorKind::NearMultipleZero: return "NearMultipleZero";
    case ErrorKind::ZeroHit: return "ZeroHit";
    case ErrorKind::NonLocallyUnivalent: return "NonLocallyUnivalent";
    case ErrorKind::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorKind::WindowTooSmall: return "WindowTooSmall";
    case ErrorKind::TupleBlowup: return "TupleBlowup";
    case ErrorKind::RegimeMismatch: return "RegimeMismatch";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::BoundaryZero: return "BoundaryZero";
    case ErrorKind::UnderResolved: return "UnderResolved";
    case ErrorKind::UnknownEntry: return "UnknownEntry";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

Complex ipow(Complex z, int k) {
  Complex r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

// Quotient of num / den for monic den.
std::vector<Complex> poly_quotient(std::vector<Complex> num, const std::vector<Complex>& den) {
  const int dn = static_cast<int>(den.size()) - 1;
  const int nn = static_cast<int>(num.size()) - 1;
  if (nn < dn) return {};
  std::vector<Complex> q(nn - dn + 1);
  for (int k = nn - dn; k >= 0; --k) {
    const Complex coef = num[k + dn] / den[dn];
    q[k] = coef;
    for (int i = 0; i <= dn; ++i) num[k + i] -= coef * den[i];
  }
  return q;
}

}  // namespace

RationalDerivative::RationalDerivative(Complex b, std::vector<Complex> zeros,
                                       std::vector<PoleEntry> poles)
    : b_(b), zeros_(std::move(zeros)), poles_(std::move(poles)) {
  if (!finite(b_)) throw Error(ErrorKind::InvalidArgument, "non-finite scale factor");
  for (Complex w : zeros_)
    if (!finite(w)) throw Error(ErrorKind::InvalidArgument, "non-finite zero");
  for (const auto& p : poles_) {
    if (!finite(p.z)) throw Error(ErrorKind::InvalidArgument, "non-finite pole");
    if (p.order < 1) throw Error(ErrorKind::InvalidArgument, "pole order must be >= 1");
  }
}

int RationalDerivative::n() const {
  int s = 0;
  for (const auto& p : poles_) s += p.order;
  return s;
}

std::vector<Complex> RationalDerivative::pole_list() const {
  std::vector<Complex> out;
  for (const auto& p : poles_)
    for (int k = 0; k < p.order; ++k) out.push_back(p.z);
  return out;
}

std::vector<Complex> RationalDerivative::pole_points() const {
  std::vector<Complex> out;
  for (const auto& p : poles_) out.push_back(p.z);
  return out;
}

std::vector<int> RationalDerivative::pole_orders() const {
  std::vector<int> out;
  for (const auto& p : poles_) out.push_back(p.order);
  return out;
}

Polynomial RationalDerivative::numerator() const { return Polynomial::from_roots(zeros_, b_); }

Polynomial RationalDerivative::denominator() const {
  const auto pl = pole_list();
  return Polynomial::from_roots(pl, 1.0);
}

RationalDerivative RationalDerivative::normalized() const {
  const Complex a1 = leading_coeff_raw(*this);
  if (std::abs(a1) == 0.0) throw Error(ErrorKind::ConstraintViolated, "g(0) = 0");
  return with_b(b_ * std::conj(a1) / std::abs(a1));
}

RationalDerivative RationalDerivative::with_b(Complex b) const {
  RationalDerivative r = *this;
  r.b_ = b;
  return r;
}

Complex TaylorSeries::eval(Complex z) const {
  Complex acc{};
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc + *it) * z;
  return acc;
}

Complex TaylorSeries::eval_derivative(Complex z) const {
  Complex acc{};
  for (int j = order(); j >= 1; --j) acc = acc * z + static_cast<double>(j) * a(j);
  return acc;
}

Complex eval_g(const RationalDerivative& rd, Complex z) {
  Complex den = 1.0;
  for (const auto& p : rd.poles()) {
    const Complex d = z - p.z;
    if (std::abs(d) < kPoleClearance) throw Error(ErrorKind::PoleHit, "evaluation at a pole of g");
    den *= ipow(d, p.order);
  }
  Complex num = rd.b();
  for (Complex w : rd.zeros()) num *= (z - w);
  return num / den;
}

Complex eval_g_prime(const RationalDerivative& rd, Complex z) {
  const auto& zs = rd.zeros();
  Complex num = 0.0;
  Complex dnum = 0.0;
  num = rd.b();
  for (std::size_t k = 0; k < zs.size(); ++k) {
    dnum = dnum * (z - zs[k]) + num;
    num *= (z - zs[k]);
  }
  Complex den = 1.0;
  Complex logd = 0.0;
  for (const auto& p : rd.poles()) {
    const Complex d = z - p.z;
    if (std::abs(d) < kPoleClearance) throw Error(ErrorKind::PoleHit, "evaluation at a pole of g");
    den *= ipow(d, p.order);
    logd += static_cast<double>(p.order) / d;
  }
  return (dnum - num * logd) / den;
}

Complex eval_g_star(const RationalDerivative& rd, Complex z) {
  if (z == Complex{}) {
    if (rd.m() == rd.n()) return std::conj(rd.b());
    throw Error(ErrorKind::PoleHit, "g* has a pole at 0 unless m == n");
  }
  return std::conj(eval_g(rd, reflect(z)));
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

Complex eval_f(const RationalDerivative& rd, Complex z, int quad_nodes) {
  if (z == Complex{}) return 0.0;
  const double len = std::abs(z);
  double dmin = std::numeric_limits<double>::infinity();
  for (const auto& p : rd.poles()) {
    // distance from pole to the segment [0, z]
    const double s = std::clamp((std::conj(z) * p.z).real() / (len * len), 0.0, 1.0);
    dmin = std::min(dmin, std::abs(p.z - s * z));
  }
  if (dmin < kPoleClearance) throw Error(ErrorKind::PathBlocked, "segment passes through a pole");
  const int panels =
      std::isfinite(dmin) ? std::clamp(static_cast<int>(std::ceil(len / dmin)), 1, 20000) : 1;
  std::vector<double> x, w;
  gauss_legendre(quad_nodes, x, w);
  Complex acc{};
  for (int p = 0; p < panels; ++p) {
    const double a = static_cast<double>(p) / panels;
    const double h = 1.0 / panels;
    for (int i = 0; i < quad_nodes; ++i) {
      const double s = a + 0.5 * h * (x[i] + 1.0);
      acc += 0.5 * h * w[i] * eval_g(rd, s * z);
    }
  }
  return acc * z;
}

std::vector<Complex> g_series(const RationalDerivative& rd, int order) {
  for (const auto& p : rd.poles())
    if (std::abs(p.z) <= 1.0) throw Error(ErrorKind::PoleInsideDisk, "pole in the closed unit disk");
  const auto pts = rd.pole_points();
  const auto ord = rd.pole_orders();
  Complex scale = 1.0;
  for (const auto& p : rd.poles()) scale /= ipow(-p.z, p.order);
  Polynomial num = rd.numerator() * scale;
  const auto inv = inverse_product_series(pts, ord, order);
  return series_product(num.coeffs(), inv, order);
}

TaylorSeries taylor_coeffs(const RationalDerivative& rd, int N) {
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "truncation order must be >= 1");
  const auto g = g_series(rd, N - 1);
  TaylorSeries ts;
  ts.coeffs.resize(N);
  for (int k = 0; k < N; ++k) ts.coeffs[k] = g[k] / static_cast<double>(k + 1);
  return ts;
}

Complex leading_coeff_raw(const RationalDerivative& rd) {
  Complex v = rd.b();
  for (Complex w : rd.zeros()) v *= -w;
  for (const auto& p : rd.poles()) v /= ipow(-p.z, p.order);
  return v;
}

double leading_coeff(const RationalDerivative& rd) {
  const Complex a1 = leading_coeff_raw(rd);
  if (std::abs(a1.imag()) > 1e-10 * std::abs(a1) || !(a1.real() > 0.0))
    throw Error(ErrorKind::ConstraintViolated,
                "a_1 = (" + std::to_string(a1.real()) + ", " + std::to_string(a1.imag()) +
                    ") is not real positive");
  return a1.real();
}

namespace {

bool segments_intersect(Complex p1, Complex p2, Complex q1, Complex q2) {
  auto cross = [](Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); };
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

bool polygon_is_simple(const std::vector<Complex>& pts) {
  const std::size_t K = pts.size();
  std::vector<double> xlo(K), xhi(K), ylo(K), yhi(K);
  for (std::size_t i = 0; i < K; ++i) {
    const Complex a = pts[i], b = pts[(i + 1) % K];
    xlo[i] = std::min(a.real(), b.real());
    xhi[i] = std::max(a.real(), b.real());
    ylo[i] = std::min(a.imag(), b.imag());
    yhi[i] = std::max(a.imag(), b.imag());
  }
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t j = i + 2; j < K; ++j) {
      if (i == 0 && j == K - 1) continue;
      if (xhi[i] < xlo[j] || xhi[j] < xlo[i] || yhi[i] < ylo[j] || yhi[j] < ylo[i]) continue;
      if (segments_intersect(pts[i], pts[(i + 1) % K], pts[j], pts[(j + 1) % K])) return false;
    }
  }
  return true;
}

bool is_locally_univalent(const RationalDerivative& rd) {
  for (Complex w : rd.zeros())
    if (!(std::abs(w) > 1.0)) return false;
  for (const auto& p : rd.poles())
    if (!(std::abs(p.z) > 1.0)) return false;
  return true;
}

UnivalenceReport univalence_report(const RationalDerivative& rd, int boundary_samples) {
  if (boundary_samples < 256)
    throw Error(ErrorKind::InvalidArgument, "boundary_samples must be >= 256");
  UnivalenceReport rep;
  double min_mod = std::numeric_limits<double>::infinity();
  for (Complex w : rd.zeros()) min_mod = std::min(min_mod, std::abs(w));
  rep.min_zero_modulus = min_mod;
  double min_pole = std::numeric_limits<double>::infinity();
  for (const auto& p : rd.poles()) min_pole = std::min(min_pole, std::abs(p.z));
  rep.locally_univalent = min_mod > 1.0 && min_pole > 1.0;
  if (!(min_pole > 1.0)) {
    rep.boundary_simple = false;
    return rep;
  }
  std::vector<Complex> pts(boundary_samples);
  try {
    const LogRationalForm lr = to_log_rational(rd);
    for (int k = 0; k < boundary_samples; ++k)
      pts[k] = lr.eval(std::polar(1.0, 2.0 * kPi * k / boundary_samples));
  } catch (const Error&) {
    for (int k = 0; k < boundary_samples; ++k)
      pts[k] = eval_f(rd, std::polar(1.0, 2.0 * kPi * k / boundary_samples));
  }
  rep.boundary_simple = polygon_is_simple(pts);
  return rep;
}

LogRationalForm to_log_rational(const RationalDerivative& rd, double merge_tolerance) {
  const auto& poles = rd.poles();
  for (std::size_t i = 0; i < poles.size(); ++i)
    for (std::size_t j = i + 1; j < poles.size(); ++j)
      if (std::abs(poles[i].z - poles[j].z) < merge_tolerance)
        throw Error(ErrorKind::DegenerateDecomposition,
                    "poles closer than the merge tolerance are not declared as one multiple pole");

  LogRationalForm lr;
  lr.pole_points = rd.pole_points();
  lr.pole_orders = rd.pole_orders();
  const int m = rd.m();
  const int n = rd.n();
  const int ell = rd.ell();

  // Laurent data at each pole: h_j(s) = s^{n_j} g(p_j + s) expanded to order n_j - 1.
  for (std::size_t j = 0; j < poles.size(); ++j) {
    const Complex pj = poles[j].z;
    const int nj = poles[j].order;
    std::vector<Complex> shifted;
    for (Complex w : rd.zeros()) shifted.push_back(w - pj);
    Polynomial num = Polynomial::from_roots(shifted, rd.b());
    std::vector<Complex> others;
    std::vector<int> other_orders;
    Complex scale = 1.0;
    for (std::size_t i = 0; i < poles.size(); ++i) {
      if (i == j) continue;
      const Complex d = pj - poles[i].z;
      scale /= ipow(d, poles[i].order);
      others.push_back(-d);
      other_orders.push_back(poles[i].order);
    }
    const auto inv = inverse_product_series(others, other_orders, nj - 1);
    auto h = series_product(num.coeffs(), inv, nj - 1);
    for (auto& v : h) v *= scale;
    // R_{j,k} = h[n_j - k]
    lr.residues.push_back(h[nj - 1]);
    std::vector<Complex> cjk;
    for (int k = 1; k <= nj - 1; ++k) cjk.push_back(-h[nj - 1 - k] / static_cast<double>(k));
    lr.pole_coeffs.push_back(std::move(cjk));
  }

  // Polynomial part of g, integrated.
  std::vector<Complex> d(1, Complex{});
  if (m >= n) {
    const auto q = poly_quotient(rd.numerator().coeffs(), rd.denominator().coeffs());
    d.resize(q.size() + 1);
    for (std::size_t k = 0; k < q.size(); ++k) d[k + 1] = q[k] / static_cast<double>(k + 1);
  }
  Complex d0{};
  for (std::size_t j = 0; j < poles.size(); ++j)
    for (std::size_t k = 0; k < lr.pole_coeffs[j].size(); ++k)
      d0 -= lr.pole_coeffs[j][k] / ipow(-poles[j].z, static_cast<int>(k + 1));
  d[0] = d0;
  lr.poly_coeffs = std::move(d);

  // Reduced denominators.
  std::vector<Complex> c_roots, ct_roots;
  Complex c_lead = 1.0, ct_lead = 1.0;
  for (const auto& p : poles) {
    for (int k = 0; k < p.order; ++k) {
      ct_roots.push_back(p.z);
      ct_lead *= -1.0 / p.z;
      if (k + 1 < p.order) {
        c_roots.push_back(p.z);
        c_lead *= -1.0 / p.z;
      }
    }
  }
  lr.denominator = Polynomial::from_roots(c_roots, c_lead).coeffs();
  lr.g_denominator = Polynomial::from_roots(ct_roots, ct_lead).coeffs();
  Complex gscale = 1.0;
  for (const auto& p : poles) gscale /= ipow(-p.z, p.order);
  lr.g_numerator = (rd.numerator() * gscale).coeffs();

  // Numerator B = (rational part series) * C, exact at degree max(m-n+1, 0) + n - ell.
  const int degB = std::max(m - n + 1, 0) + (n - ell);
  if (ell == 0 || std::all_of(poles.begin(), poles.end(), [](const PoleEntry& p) {
        return std::abs(p.z) > 1.0;
      })) {
    const TaylorSeries ts = taylor_coeffs(rd, std::max(degB, 1));
    std::vector<Complex> at(degB + 1);
    for (int k = 1; k <= degB; ++k) {
      at[k] = ts.a(k);
      for (std::size_t j = 0; j < poles.size(); ++j)
        at[k] += lr.residues[j] / (static_cast<double>(k) * ipow(poles[j].z, k));
    }
    const auto B = series_product(at, lr.denominator, degB);
    lr.numerator.assign(B.begin() + 1, B.end());
  } else {
    throw Error(ErrorKind::PoleInsideDisk, "log-rational form requires poles outside the disk");
  }
  return lr;
}

Complex LogRationalForm::eval(Complex z) const {
  Complex acc{};
  for (std::size_t j = 0; j < pole_points.size(); ++j)
    if (residues[j] != Complex{}) acc += residues[j] * std::log(1.0 - z / pole_points[j]);
  Complex num{};
  for (std::size_t k = numerator.size(); k-- > 0;) num = (num + numerator[k]) * z;
  Complex den{};
  for (std::size_t k = denominator.size(); k-- > 0;) den = den * z + denominator[k];
  return acc + num / den;
}

Complex LogRationalForm::eval_partial_fractions(Complex z) const {
  Complex acc{};
  for (std::size_t j = 0; j < pole_points.size(); ++j) {
    if (residues[j] != Complex{}) acc += residues[j] * std::log(1.0 - z / pole_points[j]);
    const Complex inv = 1.0 / (z - pole_points[j]);
    Complex pw = inv;
    for (Complex c : pole_coeffs[j]) {
      acc += c * pw;
      pw *= inv;
    }
  }
  Complex poly{};
  for (std::size_t k = poly_coeffs.size(); k-- > 0;) poly = poly * z + poly_coeffs[k];
  return acc + poly;
}

std::vector<Complex> LogRationalForm::rational_part_taylor(int N) const {
  std::vector<int> reduced;
  for (int o : pole_orders) reduced.push_back(o - 1);
  const auto inv = inverse_product_series(pole_points, reduced, N);
  std::vector<Complex> B(numerator.size() + 1);
  std::copy(numerator.begin(), numerator.end(), B.begin() + 1);
  auto s = series_product(B, inv, N);
  return std::vector<Complex>(s.begin() + 1, s.end());
}

}  // namespace hsflow

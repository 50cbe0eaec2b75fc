#include "hsflow/poisson.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace hsflow {

namespace {

Complex ipow(Complex z, int k) {
  Complex r = 1.0;
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

void require_no_zero_hit(const RationalDerivative& rd, Complex z) {
  for (Complex w : rd.zeros())
    if (std::abs(z - w) < 1e-12 * (1.0 + std::abs(w)))
      throw Error(ErrorKind::ZeroHit, "P evaluated at a zero of g");
}

}  // namespace

PoissonData coefficients_A(const RationalDerivative& rd, double q, double zero_gap_tol) {
  if (q == 0.0) throw Error(ErrorKind::InvalidArgument, "source strength q must be nonzero");
  if (rd.m() < rd.n())
    throw Error(ErrorKind::InvalidArgument, "Poisson data requires m >= n");
  const auto& w = rd.zeros();
  const auto& poles = rd.poles();
  const int m = rd.m();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (std::abs(w[i] - w[j]) < zero_gap_tol)
        throw Error(ErrorKind::NearMultipleZero, "zeros of g closer than the gap tolerance");

  PoissonData pd;
  pd.q = q;
  pd.A.resize(m);
  const double bb = std::norm(rd.b());
  for (int k = 0; k < m; ++k) {
    const Complex wk = w[k];
    const Complex wks = reflect(wk);
    // A_k = q/|b|^2 * prod(w_k - p_j) conj(w_k* - p_j) / (prod_{j!=k}(w_k - w_j) prod conj(w_k* - w_j))
    Complex num = q / bb;
    for (const auto& p : poles) num *= ipow((wk - p.z) * std::conj(wks - p.z), p.order);
    Complex den = 1.0;
    for (int j = 0; j < m; ++j) {
      if (j != k) den *= (wk - w[j]);
      den *= std::conj(wks - w[j]);
    }
    pd.A[k] = num / den;
  }
  pd.A_inf = 0.0;
  if (m == rd.n()) pd.A_inf = q / (rd.b() * std::conj(leading_coeff_raw(rd)));
  Complex s{};
  double scale = std::abs(pd.A_inf);
  for (int k = 0; k < m; ++k) {
    s += pd.A[k] / w[k];
    scale += std::abs(pd.A[k] / w[k]);
  }
  pd.A0 = pd.A_inf + s;
  pd.P0 = pd.A_inf - s;
  if (std::abs(pd.P0.imag()) > 1e-8 * std::max(scale, std::abs(pd.P0)))
    throw Error(ErrorKind::ConstraintViolated, "P(0) is not real");
  pd.mu_total = pd.P0.real();
  if (!(pd.mu_total * q > 0.0))
    throw Error(ErrorKind::NonLocallyUnivalent, "mu_total has the wrong sign");
  return pd;
}

Complex eval_P(const PoissonData& pd, const RationalDerivative& rd, Complex z) {
  require_no_zero_hit(rd, z);
  Complex acc = pd.A0;
  const auto& w = rd.zeros();
  for (std::size_t k = 0; k < w.size(); ++k) acc += 2.0 * pd.A[k] / (z - w[k]);
  return acc;
}

Complex eval_P_star(const PoissonData& pd, const RationalDerivative& rd, Complex z) {
  if (z == Complex{}) return std::conj(pd.A0);
  require_no_zero_hit(rd, reflect(z));
  Complex acc = std::conj(pd.A0);
  const auto& w = rd.zeros();
  for (std::size_t k = 0; k < w.size(); ++k)
    acc += 2.0 * std::conj(pd.A[k]) * z / (1.0 - std::conj(w[k]) * z);
  return acc;
}

double check_reflection_identity(const PoissonData& pd, const RationalDerivative& rd,
                                 int samples) {
  static constexpr double radii[] = {0.5, 0.8, 1.25, 2.0};
  std::vector<Complex> avoid;
  for (Complex w : rd.zeros()) {
    avoid.push_back(w);
    avoid.push_back(reflect(w));
  }
  for (const auto& p : rd.poles()) {
    avoid.push_back(p.z);
    avoid.push_back(reflect(p.z));
  }
  double worst = 0.0;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int s = 0; s < samples; ++s) {
    const Complex z = std::polar(radii[s % 4], golden * s);
    if (std::any_of(avoid.begin(), avoid.end(), [&](Complex a) { return std::abs(z - a) < 0.05; }))
      continue;
    const Complex lhs = eval_P(pd, rd, z) + eval_P_star(pd, rd, z);
    const Complex rhs = 2.0 * pd.q / (eval_g(rd, z) * eval_g_star(rd, z));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double mu_total_trapezoid(const RationalDerivative& rd, int nodes) {
  if (nodes < 256) throw Error(ErrorKind::InvalidArgument, "trapezoid rule needs >= 256 nodes");
  if (!is_locally_univalent(rd))
    throw Error(ErrorKind::NonLocallyUnivalent, "g vanishes or has a pole in the closed disk");
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) acc += 1.0 / std::norm(eval_g(rd, std::polar(1.0, 2.0 * kPi * k / nodes)));
  return acc / nodes;
}

double q_for_unit_growth(const RationalDerivative& rd, int nodes) {
  return 1.0 / mu_total_trapezoid(rd, nodes);
}

Complex PoissonNumerator::P_star(Complex z) const {
  return U.reversed_conj()(z) / N.reversed_conj()(z);
}

PoissonNumerator poisson_numerator(const Polynomial& N, const Polynomial& D, double q) {
  const int m = N.degree();
  const int n = D.degree();
  if (m < n) throw Error(ErrorKind::InvalidArgument, "Poisson numerator requires m >= n");
  Polynomial rhs = D * D.reversed_conj();
  {
    std::vector<Complex> shifted(m - n, Complex{});
    shifted.insert(shifted.end(), rhs.coeffs().begin(), rhs.coeffs().end());
    rhs = Polynomial(std::move(shifted)) * Complex(2.0 * q);
  }
  const Polynomial Nrev = N.reversed_conj();
  const int rows_c = 2 * m + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * rows_c + 1, 2 * (m + 1));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2 * rows_c + 1);
  for (int i = 0; i <= m; ++i) {
    // Re u_i: z^i Nrev + z^{m-i} N ; Im u_i: i z^i Nrev - i z^{m-i} N
    for (int k = 0; k <= m; ++k) {
      const Complex a = Nrev[k];
      const Complex b = N[k];
      A(2 * (i + k), 2 * i) += a.real();
      A(2 * (i + k) + 1, 2 * i) += a.imag();
      A(2 * (m - i + k), 2 * i) += b.real();
      A(2 * (m - i + k) + 1, 2 * i) += b.imag();
      const Complex ia = Complex(0, 1) * a;
      const Complex ib = Complex(0, -1) * b;
      A(2 * (i + k), 2 * i + 1) += ia.real();
      A(2 * (i + k) + 1, 2 * i + 1) += ia.imag();
      A(2 * (m - i + k), 2 * i + 1) += ib.real();
      A(2 * (m - i + k) + 1, 2 * i + 1) += ib.imag();
    }
  }
  for (int k = 0; k < rows_c && k <= rhs.degree(); ++k) {
    y(2 * k) = rhs[k].real();
    y(2 * k + 1) = rhs[k].imag();
  }
  // Im(u_0 conj(N_0)) = 0
  A(2 * rows_c, 0) = -N[0].imag();
  A(2 * rows_c, 1) = N[0].real();
  const Eigen::VectorXd x = A.colPivHouseholderQr().solve(y);
  std::vector<Complex> u(m + 1);
  for (int i = 0; i <= m; ++i) u[i] = Complex(x(2 * i), x(2 * i + 1));
  return PoissonNumerator{Polynomial(std::move(u)), N, q};
}

}  // namespace hsflow

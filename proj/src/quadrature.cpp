#include "cwmc/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb,
               double m, double fm) {
  (void)m;
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double b, double fb,
             double m, double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (!(b > a)) {
    if (a == b) return 0.0;
    throw std::invalid_argument("adaptive_simpson: requires a <= b");
  }
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(f, a, fa, b, fb, m, fm);
  return adapt(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  // nodes by Golub-Welsch on the Jacobi matrix of the (monic) Hermite recurrence
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double beta = std::sqrt(0.5 * k);
    J(k, k - 1) = beta;
    J(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermite gh;
  gh.nodes = es.eigenvalues();
  gh.weights.resize(n);
  // Weights by the Christoffel identity 1/w = sum_j p_j(t)^2 evaluated through
  // Hermite functions psi_j = p_j exp(-t^2/2). The eigenvector route loses the
  // extreme weights to roundoff (true values ~1e-100, returned values ~1e-35),
  // which wrecks any integrand wider than the weight function; psi stays in
  // range so the tiny weights come out right.
  const double pi_quarter = 0.75112554446494248286;  // pi^(-1/4)
  for (int k = 0; k < n; ++k) {
    double t = gh.nodes[k];
    double prev = 0.0;
    double cur = pi_quarter * std::exp(-0.5 * t * t);
    double sum = cur * cur;
    for (int j = 0; j + 1 < n; ++j) {
      double next = (t * cur - std::sqrt(0.5 * j) * prev) / std::sqrt(0.5 * (j + 1));
      prev = cur;
      cur = next;
      sum += cur * cur;
    }
    gh.weights[k] = std::exp(-t * t) / sum;
  }
  return gh;
}

const GaussHermite& gauss_hermite_128() {
  static const GaussHermite gh = gauss_hermite(128);
  return gh;
}

double log_integral_gauss_hermite(const std::function<double(double)>& logf, double center,
                                  double scale, const GaussHermite& gh) {
  if (!(scale > 0.0)) throw std::invalid_argument("log_integral_gauss_hermite: scale must be positive");
  const double rt2 = 1.4142135623730950488016887242097;
  int n = static_cast<int>(gh.nodes.size());
  std::vector<double> terms(n);
  for (int k = 0; k < n; ++k) {
    double t = gh.nodes[k];
    terms[k] = std::log(gh.weights[k]) + t * t + logf(center + rt2 * scale * t);
  }
  return std::log(rt2 * scale) + log_sum_exp(terms);
}

}  // namespace cwmc

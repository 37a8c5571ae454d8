#include "cwmc/discrete.hpp"

#include <cmath>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

Eigen::VectorXd DiscreteTarget::conditional(int i, int slice) const {
  Eigen::VectorXd p(dims[i]);
  for (int v = 0; v < dims[i]; ++v) p[v] = pi[state_in_slice(slice, i, v)];
  double m = p.sum();
  if (!(m > 0.0)) throw std::runtime_error("conditional: slice has zero mass");
  return p / m;
}

void DiscreteTarget::validate() const {
  if (dims.empty()) throw std::invalid_argument("target: needs at least one coordinate");
  long n = 1;
  for (int d : dims) {
    if (d < 2) throw std::invalid_argument("target: each coordinate needs >= 2 levels");
    n *= d;
  }
  if (n != pi.size()) throw std::invalid_argument("target: pi length does not match dims");
  if (pi.minCoeff() < 0.0) throw std::invalid_argument("target: pi has negative entries");
  if (std::abs(pi.sum() - 1.0) > 1e-9) throw std::invalid_argument("target: pi does not sum to 1");
}

DiscreteTarget make_target(std::vector<int> dims, Eigen::VectorXd pi) {
  DiscreteTarget t{std::move(dims), std::move(pi)};
  t.validate();
  return t;
}

DiscreteTarget random_target(const std::vector<int>& dims, Rng& rng, double floor_frac) {
  long n = 1;
  for (int d : dims) n *= d;
  Eigen::VectorXd w(n);
  for (long i = 0; i < n; ++i) w[i] = rng.exponential() + floor_frac;
  w /= w.sum();
  return make_target(dims, w);
}

DiscreteKernel make_kernel(DiscreteTarget target, Eigen::MatrixXd P, double rev_tol,
                           double psd_tol) {
  target.validate();
  const int n = target.states();
  if (P.rows() != n || P.cols() != n)
    throw std::invalid_argument("kernel: matrix shape does not match target");
  DiscreteKernel k;
  k.row_residual = (P.rowwise().sum() - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff();
  if (k.row_residual > 1e-9) throw std::invalid_argument("kernel: rows must sum to 1");
  if (P.minCoeff() < -1e-12) throw std::invalid_argument("kernel: negative transition probability");

  const Eigen::VectorXd& pi = target.pi;
  k.stationarity_residual = ((pi.transpose() * P).transpose() - pi).cwiseAbs().maxCoeff();
  double rev = 0.0;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) rev = std::max(rev, std::abs(pi[x] * P(x, y) - pi[y] * P(y, x)));
  k.reversibility_residual = rev;
  k.reversible = rev <= rev_tol;

  std::vector<int> supp;
  for (int x = 0; x < n; ++x)
    if (pi[x] > 0.0) supp.push_back(x);
  const int m = static_cast<int>(supp.size());
  Eigen::MatrixXd S(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      S(a, b) = std::sqrt(pi[supp[a]] / pi[supp[b]]) * P(supp[a], supp[b]);
  Eigen::MatrixXd Ssym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ssym);
  k.min_eigenvalue = es.eigenvalues().minCoeff();
  k.psd = k.min_eigenvalue >= -psd_tol;
  k.spectral_gap = m >= 2 ? 1.0 - es.eigenvalues()[m - 2] : 1.0;

  k.target = std::move(target);
  k.P = std::move(P);
  return k;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, long t) {
  if (t < 0) throw std::invalid_argument("matrix_power: negative exponent");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  Eigen::MatrixXd base = P;
  while (t > 0) {
    if (t & 1) result = result * base;
    base = base * base;
    t >>= 1;
  }
  return result;
}

// --- conditional matrices ---------------------------------------------------

namespace {

void check_probs(const Eigen::VectorXd& p, const char* who) {
  if (p.size() < 1) throw std::invalid_argument(std::string(who) + ": empty distribution");
  if (p.minCoeff() < 0.0) throw std::invalid_argument(std::string(who) + ": negative probability");
  if (std::abs(p.sum() - 1.0) > 1e-9)
    throw std::invalid_argument(std::string(who) + ": probabilities must sum to 1");
}

}  // namespace

Eigen::MatrixXd exact_conditional_matrix(const Eigen::VectorXd& p) {
  check_probs(p, "exact_conditional_matrix");
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd K(n, n);
  for (int x = 0; x < n; ++x) K.row(x) = p.transpose();
  return K;
}

Eigen::MatrixXd imh_conditional_matrix(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  check_probs(p, "imh_conditional_matrix");
  check_probs(q, "imh_conditional_matrix proposal");
  if (p.size() != q.size())
    throw std::invalid_argument("imh_conditional_matrix: proposal size mismatch");
  const int n = static_cast<int>(p.size());
  for (int v = 0; v < n; ++v)
    if (p[v] > 0.0 && !(q[v] > 0.0))
      throw std::invalid_argument("imh_conditional_matrix: proposal misses target support");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    double stay = 0.0;
    for (int y = 0; y < n; ++y) {
      if (y == x) continue;
      double acc;
      if (p[x] <= 0.0)
        acc = 1.0;
      else if (q[y] <= 0.0)
        acc = p[y] > 0.0 ? 1.0 : 0.0;  // never proposed; value irrelevant
      else
        acc = std::min(1.0, (p[y] * q[x]) / (p[x] * q[y]));
      K(x, y) = q[y] * acc;
      stay += K(x, y);
    }
    K(x, x) = 1.0 - stay;
  }
  return K;
}

Eigen::MatrixXd mode_imh_conditional_matrix(const Eigen::VectorXd& p, double precision) {
  check_probs(p, "mode_imh_conditional_matrix");
  const int n = static_cast<int>(p.size());
  int mode = 0;
  for (int v = 1; v < n; ++v)
    if (p[v] > p[mode]) mode = v;
  Eigen::VectorXd q(n);
  for (int v = 0; v < n; ++v) q[v] = std::exp(-0.5 * precision * sqr(double(v - mode)));
  q /= q.sum();
  return imh_conditional_matrix(p, q);
}

Eigen::MatrixXd rwm_conditional_matrix(const Eigen::VectorXd& p) {
  check_probs(p, "rwm_conditional_matrix");
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    double stay = 0.0;
    for (int dir : {-1, +1}) {
      int y = x + dir;
      if (y < 0 || y >= n) continue;
      double acc = p[x] <= 0.0 ? 1.0 : std::min(1.0, p[y] / p[x]);
      K(x, y) = 0.5 * acc;
      stay += K(x, y);
    }
    K(x, x) = 1.0 - stay;
  }
  return K;
}

Eigen::MatrixXd barker_conditional_matrix(const Eigen::VectorXd& p) {
  check_probs(p, "barker_conditional_matrix");
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    double stay = 0.0;
    for (int dir : {-1, +1}) {
      int y = x + dir;
      if (y < 0 || y >= n) continue;
      double denom = p[x] + p[y];
      double acc = denom > 0.0 ? p[y] / denom : 0.0;
      K(x, y) = 0.5 * acc;
      stay += K(x, y);
    }
    K(x, x) = 1.0 - stay;
  }
  return K;
}

Eigen::MatrixXd lazy_matrix(const Eigen::MatrixXd& K) {
  return 0.5 * (Eigen::MatrixXd::Identity(K.rows(), K.cols()) + K);
}

Eigen::MatrixXd mix_with_identity(const Eigen::MatrixXd& K, double c) {
  if (c < 0.0 || c > 1.0) throw std::invalid_argument("mix_with_identity: c must be in [0,1]");
  return c * K + (1.0 - c) * Eigen::MatrixXd::Identity(K.rows(), K.cols());
}

ConditionalBuilder exact_builder() {
  return [](const Eigen::VectorXd& p) { return exact_conditional_matrix(p); };
}

ConditionalBuilder imh_builder(const Eigen::VectorXd& q) {
  return [q](const Eigen::VectorXd& p) { return imh_conditional_matrix(p, q); };
}

ConditionalBuilder mode_imh_builder(double precision) {
  return [precision](const Eigen::VectorXd& p) { return mode_imh_conditional_matrix(p, precision); };
}

ConditionalBuilder rwm_builder() {
  return [](const Eigen::VectorXd& p) { return rwm_conditional_matrix(p); };
}

ConditionalBuilder barker_builder() {
  return [](const Eigen::VectorXd& p) { return barker_conditional_matrix(p); };
}

ConditionalBuilder lazy_of(ConditionalBuilder inner) {
  return [inner = std::move(inner)](const Eigen::VectorXd& p) { return lazy_matrix(inner(p)); };
}

ConditionalBuilder mix_identity_of(ConditionalBuilder inner, double c) {
  return [inner = std::move(inner), c](const Eigen::VectorXd& p) {
    return mix_with_identity(inner(p), c);
  };
}

ConditionalBuilder repeated_of(ConditionalBuilder inner, int k) {
  if (k < 1) throw std::invalid_argument("repeated_of: k must be >= 1");
  return [inner = std::move(inner), k](const Eigen::VectorXd& p) {
    return matrix_power(inner(p), k);
  };
}

// --- random-scan assembly ---------------------------------------------------

RandomScanDiscrete assemble_random_scan(const DiscreteTarget& target,
                                        const std::vector<ConditionalBuilder>& builders,
                                        Eigen::VectorXd weights) {
  target.validate();
  const int d = target.coords();
  const int n = target.states();
  if (static_cast<int>(builders.size()) != d)
    throw std::invalid_argument("assemble_random_scan: one builder per coordinate required");
  if (weights.size() == 0) weights = Eigen::VectorXd::Constant(d, 1.0 / d);
  if (weights.size() != d || weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("assemble_random_scan: weights must be a distribution over coordinates");

  RandomScanDiscrete rs;
  rs.target = target;
  rs.weights = weights;
  rs.coord_kernels.resize(d);
  rs.cond_kernels.resize(d);
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < d; ++i) {
    rs.cond_kernels[i].resize(target.slices(i));
    Eigen::MatrixXd Pi = Eigen::MatrixXd::Zero(n, n);
    for (int slice = 0; slice < target.slices(i); ++slice) {
      double mass = target.slice_mass(i, slice);
      Eigen::MatrixXd K;
      if (mass > 0.0) {
        K = builders[i](target.conditional(i, slice));
        if (K.rows() != target.dims[i] || K.cols() != target.dims[i])
          throw std::invalid_argument("assemble_random_scan: builder returned wrong shape");
      } else {
        // unreachable slice; keep the chain lazy there
        K = Eigen::MatrixXd::Identity(target.dims[i], target.dims[i]);
      }
      rs.cond_kernels[i][slice] = K;
      for (int v = 0; v < target.dims[i]; ++v)
        for (int w = 0; w < target.dims[i]; ++w)
          Pi(target.state_in_slice(slice, i, v), target.state_in_slice(slice, i, w)) = K(v, w);
    }
    rs.coord_kernels[i] = Pi;
    total += weights[i] * Pi;
  }
  rs.kernel = make_kernel(target, std::move(total));
  return rs;
}

RandomScanDiscrete gibbs_sampler(const DiscreteTarget& target, Eigen::VectorXd weights) {
  std::vector<ConditionalBuilder> builders(target.coords(), exact_builder());
  return assemble_random_scan(target, builders, std::move(weights));
}

DiscreteKernel product_kernel(const std::vector<DiscreteKernel>& factors) {
  if (factors.empty()) throw std::invalid_argument("product_kernel: needs at least one factor");
  Eigen::MatrixXd P = factors[0].P;
  Eigen::VectorXd pi = factors[0].target.pi;
  std::vector<int> dims = factors[0].target.dims;
  for (size_t j = 1; j < factors.size(); ++j) {
    const Eigen::MatrixXd& Q = factors[j].P;
    const Eigen::VectorXd& rho = factors[j].target.pi;
    // flatten with earlier factors fastest, matching the target layout
    Eigen::MatrixXd Pn(P.rows() * Q.rows(), P.cols() * Q.cols());
    for (int b = 0; b < Q.rows(); ++b)
      for (int bb = 0; bb < Q.cols(); ++bb)
        Pn.block(b * P.rows(), bb * P.cols(), P.rows(), P.cols()) = Q(b, bb) * P;
    Eigen::VectorXd pin(pi.size() * rho.size());
    for (int b = 0; b < rho.size(); ++b) pin.segment(b * pi.size(), pi.size()) = rho[b] * pi;
    P = std::move(Pn);
    pi = std::move(pin);
    for (int dd : factors[j].target.dims) dims.push_back(dd);
  }
  return make_kernel(make_target(dims, pi), P);
}

DiscreteTarget isolated_atom_target(int n) {
  if (n < 0) throw std::invalid_argument("isolated_atom_target: n must be >= 0");
  double eps = 0.1 / std::pow(2.0, n);
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(9);
  // states (x1,x2) in {0,1,2}^2, coordinate 0 fastest
  for (int x2 = 0; x2 < 2; ++x2)
    for (int x1 = 0; x1 < 2; ++x1) pi[x1 + 3 * x2] = (1.0 - eps) * 0.25;
  pi[2 + 3 * 2] = eps;
  return make_target({3, 3}, pi);
}

RandomScanDiscrete isolated_atom_gibbs(int n) { return gibbs_sampler(isolated_atom_target(n)); }

}  // namespace cwmc

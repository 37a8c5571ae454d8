#include "cwmc/conductance.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

constexpr int kMaxScanStates = 24;
constexpr int kMaxVertexStates = 12;
constexpr double kMassTol = 1e-13;

void require_scannable(int n, const char* who) {
  if (n > kMaxScanStates)
    throw std::invalid_argument(std::string(who) + ": subset enumeration limited to " +
                                std::to_string(kMaxScanStates) + " states");
}

// the warm-polytope suprema enumerate a vertex per subset and would be far too
// slow at the full scan cap; they refuse beyond 12 states instead of approximating
void require_vertex_scannable(int n, const char* who) {
  if (n > kMaxVertexStates)
    throw std::invalid_argument(std::string(who) + ": warm polytope enumeration limited to " +
                                std::to_string(kMaxVertexStates) + " states");
}

// ties toward the set containing the lowest differing state index
bool mask_less(std::uint32_t a, std::uint32_t b) {
  std::uint32_t diff = a ^ b;
  if (diff == 0) return false;
  return (a >> std::countr_zero(diff)) & 1u;
}

}  // namespace

double set_mass(const DiscreteTarget& t, std::uint32_t mask) {
  double m = 0.0;
  for (int x = 0; x < t.states(); ++x)
    if ((mask >> x) & 1u) m += t.pi[x];
  return m;
}

double flux(const DiscreteKernel& k, std::uint32_t mask) {
  const int n = k.target.states();
  double f = 0.0;
  for (int x = 0; x < n; ++x) {
    if (!((mask >> x) & 1u)) continue;
    double out = 0.0;
    for (int y = 0; y < n; ++y)
      if (!((mask >> y) & 1u)) out += k.P(x, y);
    f += k.target.pi[x] * out;
  }
  return f;
}

void scan_subsets(const DiscreteTarget& t, const std::vector<const Eigen::MatrixXd*>& kernels,
                  const std::vector<bool>& mark,
                  const std::function<void(std::uint32_t, const double*, double, double)>& visit) {
  const int n = t.states();
  require_scannable(n, "scan_subsets");
  const int m = static_cast<int>(kernels.size());
  // w[k](x,y) = pi(x) P_k(x,y)
  std::vector<Eigen::MatrixXd> w(m);
  for (int k = 0; k < m; ++k) w[k] = t.pi.asDiagonal() * (*kernels[k]);

  // s_in[k][v] = sum_{x in A} w_k(x,v), s_out[k][v] = sum_{y in A} w_k(v,y)
  std::vector<Eigen::VectorXd> s_in(m, Eigen::VectorXd::Zero(n));
  std::vector<Eigen::VectorXd> s_out(m, Eigen::VectorXd::Zero(n));
  std::vector<double> fl(m, 0.0);
  double pi_a = 0.0, pi_marked = 0.0;
  std::uint32_t mask = 0;

  const std::uint64_t total = 1ull << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int u = std::countr_zero(g);
    const bool adding = !((mask >> u) & 1u);
    if (adding) {
      for (int k = 0; k < m; ++k) {
        fl[k] += t.pi[u] - w[k](u, u) - s_out[k][u] - s_in[k][u];
        s_in[k] += w[k].row(u).transpose();
        s_out[k] += w[k].col(u);
      }
      pi_a += t.pi[u];
      if (mark[u]) pi_marked += t.pi[u];
      mask |= (1u << u);
    } else {
      for (int k = 0; k < m; ++k) {
        s_in[k] -= w[k].row(u).transpose();
        s_out[k] -= w[k].col(u);
        fl[k] -= t.pi[u] - w[k](u, u) - s_out[k][u] - s_in[k][u];
      }
      pi_a -= t.pi[u];
      if (mark[u]) pi_marked -= t.pi[u];
      mask &= ~(1u << u);
    }
    visit(mask, fl.data(), pi_a, pi_marked);
  }
}

std::vector<SConductanceResult> s_conductance_profile(const DiscreteKernel& k,
                                                      const std::vector<double>& s_grid) {
  for (double s : s_grid)
    if (s < 0.0 || s >= 0.5)
      throw std::invalid_argument("s_conductance: s must lie in [0, 1/2)");
  std::vector<SConductanceResult> out(s_grid.size());
  for (size_t j = 0; j < s_grid.size(); ++j) {
    out[j].s = s_grid[j];
    out[j].phi = kInf;
    out[j].phi_alt = kInf;
  }
  std::vector<bool> mark(k.target.states(), false);
  scan_subsets(k.target, {&k.P}, mark,
               [&](std::uint32_t mask, const double* fl, double pi_a, double) {
                 if (pi_a > 0.5 + kMassTol) return;
                 for (size_t j = 0; j < s_grid.size(); ++j) {
                   double s = s_grid[j];
                   if (!(pi_a > s + kMassTol)) continue;
                   auto& r = out[j];
                   r.any_admissible = true;
                   double v = fl[0] / pi_a;
                   if (v < r.phi || (v == r.phi && mask_less(mask, r.argmin))) {
                     r.phi = v;
                     r.argmin = mask;
                   }
                   double va = fl[0] / (pi_a - s);
                   if (va < r.phi_alt || (va == r.phi_alt && mask_less(mask, r.argmin_alt))) {
                     r.phi_alt = va;
                     r.argmin_alt = mask;
                   }
                 }
               });
  return out;
}

SConductanceResult s_conductance(const DiscreteKernel& k, double s) {
  return s_conductance_profile(k, {s})[0];
}

double normalized_kappa(const Eigen::MatrixXd& K, const Eigen::VectorXd& p) {
  const int n = static_cast<int>(p.size());
  if (K.rows() != n || K.cols() != n)
    throw std::invalid_argument("normalized_kappa: shape mismatch");
  require_scannable(n, "normalized_kappa");
  double best = kInf;
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double pb = 0.0;
    for (int v = 0; v < n; ++v)
      if ((mask >> v) & 1u) pb += p[v];
    if (!(pb > 0.0) || !(pb < 1.0)) continue;
    double fl = 0.0;
    for (int v = 0; v < n; ++v) {
      if (!((mask >> v) & 1u)) continue;
      double out = 0.0;
      for (int w = 0; w < n; ++w)
        if (!((mask >> w) & 1u)) out += K(v, w);
      fl += p[v] * out;
    }
    best = std::min(best, fl / (pb * (1.0 - pb)));
  }
  return best;
}

double conditional_conductance(const RandomScanDiscrete& rs, int i, const std::vector<bool>& K) {
  const DiscreteTarget& t = rs.target;
  if (i < 0 || i >= t.coords()) throw std::invalid_argument("conditional_conductance: bad coordinate");
  if (static_cast<int>(K.size()) != t.states())
    throw std::invalid_argument("conditional_conductance: K size mismatch");
  std::vector<bool> touched(t.slices(i), false);
  bool any = false;
  for (int x = 0; x < t.states(); ++x)
    if (K[x]) {
      touched[t.slice_of(x, i)] = true;
      any = true;
    }
  if (!any) throw std::invalid_argument("conditional_conductance: K is empty");
  double worst = kInf;
  for (int slice = 0; slice < t.slices(i); ++slice) {
    if (!touched[slice]) continue;
    if (!(t.slice_mass(i, slice) > 0.0)) {
      // zero-mass slice: no conditional distribution exists, so it cannot
      // constrain the infimum; skip it rather than poisoning the result
      std::fprintf(stderr, "warning: coordinate %d slice %d has zero mass, excluded from kappa\n", i, slice);
      continue;
    }
    worst = std::min(worst, normalized_kappa(rs.cond_kernels[i][slice], t.conditional(i, slice)));
  }
  return worst;
}

double conditional_conductance(const RandomScanDiscrete& rs, int i) {
  return conditional_conductance(rs, i, std::vector<bool>(rs.target.states(), true));
}

double kappa_min(const RandomScanDiscrete& rs, const std::vector<bool>& K) {
  double worst = kInf;
  for (int i = 0; i < rs.target.coords(); ++i)
    worst = std::min(worst, conditional_conductance(rs, i, K));
  return worst;
}

double kappa_min(const RandomScanDiscrete& rs) {
  return kappa_min(rs, std::vector<bool>(rs.target.states(), true));
}

// --- mixing -------------------------------------------------------------------

double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("tv_distance: size mismatch");
  return 0.5 * (a - b).cwiseAbs().sum();
}

namespace {

// max over {0 <= mu <= cap, sum mu = 1} of sum mu_x coef_x; greedy fill
double warm_polytope_max(const Eigen::VectorXd& coef, const Eigen::VectorXd& cap,
                         std::vector<int>& order) {
  const int n = static_cast<int>(coef.size());
  order.resize(n);
  for (int x = 0; x < n; ++x) order[x] = x;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return coef[a] > coef[b]; });
  double remaining = 1.0, val = 0.0;
  for (int idx : order) {
    if (remaining <= 0.0) break;
    double take = std::min(cap[idx], remaining);
    val += take * coef[idx];
    remaining -= take;
  }
  return val;
}

}  // namespace

double worst_warm_tv(const DiscreteTarget& t, const Eigen::MatrixXd& Pt, double M) {
  const int n = t.states();
  require_vertex_scannable(n, "worst_warm_tv");
  if (M < 1.0) throw std::invalid_argument("worst_warm_tv: warm constant must be >= 1");
  Eigen::VectorXd cap = M * t.pi;
  // r[x] = Pt(x, B) maintained along the Gray walk; coef = r - pi(B)
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  double pi_b = 0.0;
  std::uint32_t mask = 0;
  std::vector<int> order;
  double best = 0.0;
  const std::uint64_t total = 1ull << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int u = std::countr_zero(g);
    if (!((mask >> u) & 1u)) {
      r += Pt.col(u);
      pi_b += t.pi[u];
      mask |= (1u << u);
    } else {
      r -= Pt.col(u);
      pi_b -= t.pi[u];
      mask &= ~(1u << u);
    }
    Eigen::VectorXd coef = r.array() - pi_b;
    best = std::max(best, warm_polytope_max(coef, cap, order));
  }
  return best;
}

namespace {

struct PowerLadder {
  std::vector<Eigen::MatrixXd> pow2;  // pow2[k] = P^(2^k)
  explicit PowerLadder(const Eigen::MatrixXd& P) { pow2.push_back(P); }
  const Eigen::MatrixXd& upto(int k) {
    while (static_cast<int>(pow2.size()) <= k) pow2.push_back(pow2.back() * pow2.back());
    return pow2[k];
  }
  Eigen::MatrixXd at(long t) {
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(pow2[0].rows(), pow2[0].cols());
    for (int k = 0; t > 0; ++k, t >>= 1)
      if (t & 1) result = result * upto(k);
    return result;
  }
};

MixingResult mixing_search(const std::function<double(const Eigen::MatrixXd&)>& dist,
                           const Eigen::MatrixXd& P, double eps, long cap) {
  MixingResult res;
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  double d0 = dist(I);
  if (d0 < eps) return {true, 0, d0};
  PowerLadder ladder(P);
  long lo = 0, hi = -1;
  double d_hi = 0.0;
  for (long t = 1; t <= cap; t *= 2) {
    double d = dist(ladder.at(t));
    if (d < eps) {
      hi = t;
      d_hi = d;
      break;
    }
    lo = t;
    if (t > cap / 2) break;
  }
  if (hi < 0) {
    double d_cap = dist(ladder.at(cap));
    if (!(d_cap < eps)) return {false, cap, d_cap};
    hi = cap;
    d_hi = d_cap;
  }
  while (hi - lo > 1) {
    long mid = lo + (hi - lo) / 2;
    double d = dist(ladder.at(mid));
    if (d < eps) {
      hi = mid;
      d_hi = d;
    } else {
      lo = mid;
    }
  }
  return {true, hi, d_hi};
}

}  // namespace

MixingResult exact_mixing_time(const DiscreteKernel& k, double eps, double M, long cap) {
  if (!(eps > 0.0)) throw std::invalid_argument("exact_mixing_time: eps must be positive");
  return mixing_search(
      [&](const Eigen::MatrixXd& Pt) { return worst_warm_tv(k.target, Pt, M); }, k.P, eps, cap);
}

MixingResult exact_mixing_time_from(const DiscreteKernel& k, const Eigen::VectorXd& mu, double eps,
                                    long cap) {
  if (mu.size() != k.target.pi.size())
    throw std::invalid_argument("exact_mixing_time_from: start distribution size mismatch");
  return mixing_search(
      [&](const Eigen::MatrixXd& Pt) {
        return tv_distance((mu.transpose() * Pt).transpose(), k.target.pi);
      },
      k.P, eps, cap);
}

double kernel_discrepancy(const DiscreteKernel& P1, const DiscreteKernel& P2, double M) {
  const int n = P1.target.states();
  if (P2.target.states() != n) throw std::invalid_argument("kernel_discrepancy: state mismatch");
  require_vertex_scannable(n, "kernel_discrepancy");
  if (M < 1.0) throw std::invalid_argument("kernel_discrepancy: warm constant must be >= 1");
  Eigen::VectorXd cap = M * P1.target.pi;
  Eigen::MatrixXd D = P1.P - P2.P;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);  // D(x, B)
  std::uint32_t mask = 0;
  std::vector<int> order;
  double best = 0.0;
  const std::uint64_t total = 1ull << n;
  for (std::uint64_t g = 1; g < total; ++g) {
    const int u = std::countr_zero(g);
    if (!((mask >> u) & 1u)) {
      coef += D.col(u);
      mask |= (1u << u);
    } else {
      coef -= D.col(u);
      mask &= ~(1u << u);
    }
    best = std::max(best, warm_polytope_max(coef, cap, order));
  }
  return best;
}

CollapseResult collapse_two_block(const DiscreteTarget& target, const std::vector<int>& t_map,
                                  double tol) {
  target.validate();
  if (target.coords() != 2)
    throw std::invalid_argument("collapse_two_block: requires a two-coordinate target");
  const int n1 = target.dims[0], n2 = target.dims[1];
  if (static_cast<int>(t_map.size()) != n1)
    throw std::invalid_argument("collapse_two_block: t_map size mismatch");
  int K = 0;
  for (int v : t_map) {
    if (v < 0) throw std::invalid_argument("collapse_two_block: t_map values must be >= 0");
    K = std::max(K, v + 1);
  }
  if (K < 2)
    throw std::invalid_argument("collapse_two_block: the map must take at least two values");

  // marginal of coordinate 1 and conditional rows of coordinate 2
  Eigen::VectorXd marg(n1);
  Eigen::MatrixXd cond(n1, n2);
  for (int u = 0; u < n1; ++u) {
    double m = 0.0;
    for (int x2 = 0; x2 < n2; ++x2) m += target.pi[u + n1 * x2];
    marg[u] = m;
    for (int x2 = 0; x2 < n2; ++x2) cond(u, x2) = m > 0.0 ? target.pi[u + n1 * x2] / m : 0.0;
  }

  CollapseResult res;
  res.premise_residual = 0.0;
  for (int u = 0; u < n1; ++u) {
    if (!(marg[u] > 0.0)) continue;
    for (int v = u + 1; v < n1; ++v) {
      if (!(marg[v] > 0.0) || t_map[u] != t_map[v]) continue;
      double diff = (cond.row(u) - cond.row(v)).cwiseAbs().maxCoeff();
      if (diff > res.premise_residual) {
        res.premise_residual = diff;
        res.witness_u = u;
        res.witness_v = v;
      }
    }
  }
  res.premise_holds = res.premise_residual <= tol;
  if (!res.premise_holds) return res;

  Eigen::VectorXd pi_hat = Eigen::VectorXd::Zero(K * n2);
  for (int u = 0; u < n1; ++u)
    for (int x2 = 0; x2 < n2; ++x2) pi_hat[t_map[u] + K * x2] += target.pi[u + n1 * x2];
  res.collapsed = make_target({K, n2}, pi_hat);
  res.collapsed_gibbs = gibbs_sampler(res.collapsed);
  return res;
}

}  // namespace cwmc

#include "cwmc/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

std::string subset_note(const char* what, std::uint32_t mask, int coord) {
  std::ostringstream os;
  os << what << " A=0x" << std::hex << mask << std::dec;
  if (coord >= 0) os << " coord=" << coord;
  return os.str();
}

}  // namespace

MwgInstance random_mwg_instance(Rng& rng, bool uniform_weights) {
  return random_mwg_instance(rng, MwgOptions{.uniform_weights = uniform_weights});
}

MwgInstance random_mwg_instance(Rng& rng, const MwgOptions& opts) {
  std::vector<int> dims;
  for (;;) {
    dims.clear();
    int d = opts.min_coords + rng.uniform_int(opts.max_coords - opts.min_coords + 1);
    long total = 1;
    for (int i = 0; i < d; ++i) {
      dims.push_back(2 + rng.uniform_int(opts.max_levels - 1));
      total *= dims.back();
    }
    if (total <= 16) break;
  }
  MwgInstance inst;
  DiscreteTarget target = random_target(dims, rng, 0.05);
  const int d = target.coords();

  std::vector<ConditionalBuilder> builders(d);
  std::string kind;
  for (int i = 0; i < d; ++i) {
    int pick = opts.imh_lazyrwm_only ? (rng.bernoulli(0.5) ? 1 : 3) : rng.uniform_int(5);
    switch (pick) {
      case 0:
        builders[i] = exact_builder();
        kind += "exact ";
        break;
      case 1:
        builders[i] = lazy_of(rwm_builder());
        kind += "lazy-rwm ";
        break;
      case 2:
        builders[i] = lazy_of(barker_builder());
        kind += "lazy-barker ";
        break;
      case 3: {
        Eigen::VectorXd q(dims[i]);
        for (int v = 0; v < dims[i]; ++v) q[v] = rng.exponential() + 0.05;
        q /= q.sum();
        builders[i] = imh_builder(q);
        kind += "imh ";
        break;
      }
      default:
        builders[i] = mode_imh_builder(rng.uniform(0.3, 3.0));
        kind += "imh-mode ";
        break;
    }
  }

  Eigen::VectorXd weights;
  if (opts.uniform_weights) {
    weights = Eigen::VectorXd::Constant(d, 1.0 / d);
  } else {
    weights.resize(d);
    for (int i = 0; i < d; ++i) weights[i] = rng.exponential() + 0.1;
    weights /= weights.sum();
  }

  inst.P = assemble_random_scan(target, builders, weights);
  std::vector<ConditionalBuilder> exact_all(d, exact_builder());
  inst.G = assemble_random_scan(target, exact_all, weights);
  inst.kind = kind;

  const int n = target.states();
  inst.K.assign(n, true);
  inst.pi_Kc = 0.0;
  if (rng.bernoulli(0.5)) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return target.pi[a] < target.pi[b]; });
    double budget = rng.uniform(0.02, 0.2);
    for (int idx = 0; idx + 1 < n; ++idx) {
      int x = order[idx];
      if (inst.pi_Kc + target.pi[x] > budget) break;
      inst.K[x] = false;
      inst.pi_Kc += target.pi[x];
    }
  }
  return inst;
}

void check_coordinate_flux_bound(const MwgInstance& inst, SlackTracker& flux_tracker,
                                 SlackTracker& domination_tracker) {
  const DiscreteTarget& t = inst.P.target;
  std::vector<bool> mark(t.states());
  for (int x = 0; x < t.states(); ++x) mark[x] = !inst.K[x];
  for (int i = 0; i < t.coords(); ++i) {
    double kappa_i = conditional_conductance(inst.P, i, inst.K);
    if (!std::isfinite(kappa_i)) continue;
    scan_subsets(t, {&inst.P.coord_kernels[i], &inst.G.coord_kernels[i]}, mark,
                 [&](std::uint32_t mask, const double* fl, double, double pi_marked) {
                   double p_flux = fl[0], g_flux = fl[1];
                   flux_tracker.add(p_flux - kappa_i * (g_flux - pi_marked),
                                    [&] { return subset_note("flux bound", mask, i); });
                   domination_tracker.add(g_flux - p_flux,
                                          [&] { return subset_note("domination", mask, i); });
                 });
  }
}

void check_conductance_domination(const MwgInstance& inst, const std::vector<double>& s_grid,
                                  SlackTracker& tracker) {
  auto prof_p = s_conductance_profile(inst.P.kernel, s_grid);
  auto prof_g = s_conductance_profile(inst.G.kernel, s_grid);
  for (size_t j = 0; j < s_grid.size(); ++j) {
    if (!prof_p[j].any_admissible) continue;
    tracker.add(prof_g[j].phi - prof_p[j].phi, [&] {
      std::ostringstream os;
      os << "phi ordering s=" << s_grid[j];
      return os.str();
    });
  }
}

void check_conductance_transfer(const MwgInstance& inst, const std::vector<double>& s_grid,
                                SlackTracker& tracker) {
  auto prof_p = s_conductance_profile(inst.P.kernel, s_grid);
  auto prof_g = s_conductance_profile(inst.G.kernel, s_grid);
  std::vector<bool> full(inst.P.target.states(), true);
  double kappa_full = kappa_min(inst.P, full);
  double kappa_K = kappa_min(inst.P, inst.K);
  double penalty_sum = 0.0;
  for (int i = 0; i < inst.P.target.coords(); ++i) {
    double ki = conditional_conductance(inst.P, i, inst.K);
    if (std::isfinite(ki)) penalty_sum += inst.P.weights[i] * ki;
  }
  for (size_t j = 0; j < s_grid.size(); ++j) {
    if (!prof_p[j].any_admissible) continue;
    double s = s_grid[j];
    if (std::isfinite(kappa_full))
      tracker.add(prof_p[j].phi - kappa_full * prof_g[j].phi, [&] {
        std::ostringstream os;
        os << "transfer full-space s=" << s;
        return os.str();
      });
    if (s > 0.0 && std::isfinite(kappa_K)) {
      double rhs = kappa_K * prof_g[j].phi - (inst.pi_Kc / s) * penalty_sum;
      tracker.add(prof_p[j].phi - rhs, [&] {
        std::ostringstream os;
        os << "transfer warm-region s=" << s;
        return os.str();
      });
    }
  }
}

void check_shifted_conductance_transfer(const MwgInstance& inst, const std::vector<double>& s_grid,
                                        SlackTracker& tracker) {
  auto prof_p = s_conductance_profile(inst.P.kernel, s_grid);
  auto prof_g = s_conductance_profile(inst.G.kernel, s_grid);
  std::vector<bool> full(inst.P.target.states(), true);
  double kappa_full = kappa_min(inst.P, full);
  double kappa_K = kappa_min(inst.P, inst.K);
  const int d = inst.P.target.coords();
  bool uniform = true;
  for (int i = 0; i < d; ++i)
    if (std::abs(inst.P.weights[i] - 1.0 / d) > 1e-12) uniform = false;
  double penalty_avg = 0.0;
  for (int i = 0; i < d; ++i) {
    double ki = conditional_conductance(inst.P, i, inst.K);
    if (std::isfinite(ki)) penalty_avg += ki / d;
  }
  for (size_t j = 0; j < s_grid.size(); ++j) {
    if (!prof_p[j].any_admissible) continue;
    double s = s_grid[j];
    if (std::isfinite(kappa_full))
      tracker.add(prof_p[j].phi_alt - kappa_full * prof_g[j].phi_alt, [&] {
        std::ostringstream os;
        os << "shifted transfer s=" << s;
        return os.str();
      });
    if (!uniform || !std::isfinite(kappa_K)) continue;
    for (size_t jj = 0; jj < j; ++jj) {
      double sp = s_grid[jj];
      if (!(sp < s) || !prof_g[jj].any_admissible) continue;
      double rhs = kappa_K * (2.0 * (s - sp) / (1.0 - 2.0 * s)) * prof_g[jj].phi_alt -
                   (2.0 * inst.pi_Kc / (1.0 - 2.0 * s)) * penalty_avg;
      tracker.add(prof_p[j].phi_alt - rhs, [&] {
        std::ostringstream os;
        os << "shifted warm-region s=" << s << " s'=" << sp;
        return os.str();
      });
    }
  }
}

void check_identity_mixture_tightness(Rng& rng, double c, const std::vector<double>& s_grid,
                                      SlackTracker& tracker) {
  std::vector<int> dims;
  int d = 2 + rng.uniform_int(2);
  long total = 1;
  for (int i = 0; i < d; ++i) {
    dims.push_back(2 + rng.uniform_int(2));
    total *= dims.back();
  }
  if (total > 16) dims.assign(2, 3);
  DiscreteTarget target = random_target(dims, rng, 0.05);
  std::vector<ConditionalBuilder> builders(target.coords(),
                                           mix_identity_of(exact_builder(), c));
  auto P = assemble_random_scan(target, builders);
  auto G = gibbs_sampler(target);
  for (int i = 0; i < target.coords(); ++i) {
    double ki = conditional_conductance(P, i);
    tracker.add(-std::abs(ki - c), [&] {
      std::ostringstream os;
      os << "kappa of identity mixture, coord=" << i << " c=" << c;
      return os.str();
    });
  }
  auto prof_p = s_conductance_profile(P.kernel, s_grid);
  auto prof_g = s_conductance_profile(G.kernel, s_grid);
  for (size_t j = 0; j < s_grid.size(); ++j) {
    if (!prof_p[j].any_admissible) continue;
    tracker.add(-std::abs(prof_p[j].phi - c * prof_g[j].phi), [&] {
      std::ostringstream os;
      os << "phi equality for identity mixture s=" << s_grid[j];
      return os.str();
    });
  }
}

void check_warm_mixing_bound(const DiscreteKernel& k, const std::vector<double>& s_grid,
                             const std::vector<double>& M_grid, const std::vector<long>& t_grid,
                             SlackTracker& tv_tracker, SlackTracker& tmix_tracker) {
  if (!k.reversible || !k.psd)
    throw std::invalid_argument("check_warm_mixing_bound: needs a reversible PSD kernel");
  auto prof = s_conductance_profile(k, s_grid);
  for (size_t j = 0; j < s_grid.size(); ++j) {
    if (!prof[j].any_admissible) continue;
    double s = s_grid[j];
    double phi = prof[j].phi;
    double decay = 1.0 - 0.5 * phi * phi;
    for (double M : M_grid) {
      for (long t : t_grid) {
        double bound = M * s + M * std::pow(decay, static_cast<double>(t));
        double tv = worst_warm_tv(k.target, matrix_power(k.P, t), M);
        tv_tracker.add(bound - tv, [&] {
          std::ostringstream os;
          os << "warm tv bound s=" << s << " M=" << M << " t=" << t;
          return os.str();
        });
      }
      double eps = 2.0 * M * s;
      if (!(eps > 0.0) || eps >= 1.0 || !(phi > 0.0)) continue;
      double rhs = (std::log(2.0 * M) - std::log(eps)) / (-std::log(decay));
      auto mix = exact_mixing_time(k, eps, M);
      if (!mix.converged) continue;
      tmix_tracker.add(std::floor(rhs) + 1.0 - static_cast<double>(mix.t), [&] {
        std::ostringstream os;
        os << "mixing-time bound eps=" << eps << " M=" << M;
        return os.str();
      });
    }
  }
}

void check_restricted_start_lower_bound(const DiscreteKernel& k, long t_max,
                                        SlackTracker& tracker) {
  if (!k.reversible)
    throw std::invalid_argument("check_restricted_start_lower_bound: needs a reversible kernel");
  const int n = k.target.states();
  if (n > 16)
    throw std::invalid_argument("check_restricted_start_lower_bound: too many states");
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double pa = set_mass(k.target, mask);
    if (!(pa > 0.0) || pa > 0.5 + 1e-13) continue;
    double ratio = flux(k, mask) / pa;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (int x = 0; x < n; ++x)
      if ((mask >> x) & 1u) mu[x] = k.target.pi[x] / pa;
    for (long t = 1; t <= t_max; ++t) {
      mu = (mu.transpose() * k.P).transpose();
      double tv = tv_distance(mu, k.target.pi);
      tracker.add(tv - (0.5 - static_cast<double>(t) * ratio),
                  [&] { return subset_note("restricted-start lower bound", mask, -1); });
    }
  }
}

void check_conductance_from_mixing(const DiscreteKernel& k, const std::vector<double>& s_grid,
                                   const std::vector<double>& eps_grid, SlackTracker& tracker) {
  auto prof = s_conductance_profile(k, s_grid);
  for (size_t j = 0; j < s_grid.size(); ++j) {
    double s = s_grid[j];
    if (!(s > 0.0) || !prof[j].any_admissible) continue;
    for (double eps : eps_grid) {
      if (!(eps > 0.0) || eps >= 0.5) continue;
      auto mix = exact_mixing_time(k, eps, 1.0 / s);
      if (!mix.converged || mix.t == 0) continue;
      tracker.add(prof[j].phi - (0.5 - eps) / static_cast<double>(mix.t), [&] {
        std::ostringstream os;
        os << "conductance from mixing s=" << s << " eps=" << eps;
        return os.str();
      });
    }
  }
}

void check_perturbed_conductance(const DiscreteKernel& P1, const DiscreteKernel& P2,
                                 const std::vector<double>& s_grid, SlackTracker& tracker) {
  double delta = tv_distance(P1.target.pi, P2.target.pi);
  for (double s : s_grid) {
    if (!(s > 0.0) || s < delta || s >= 0.5) continue;
    auto r1 = s_conductance(P1, s);
    auto r2 = s_conductance(P2, s - delta);
    if (!r2.any_admissible) continue;
    double disc = kernel_discrepancy(P1, P2, 1.0 / s);
    double slack = r1.any_admissible ? r1.phi - (r2.phi - disc - 2.0 * delta / s) : kInf;
    tracker.add(slack, [&] {
      std::ostringstream os;
      os << "perturbed conductance s=" << s << " delta=" << delta;
      return os.str();
    });
  }
}

void check_exact_update_discrepancy(const DiscreteTarget& t1, const DiscreteTarget& t2,
                                    const std::vector<double>& M_grid, SlackTracker& tracker) {
  if (t1.dims != t2.dims)
    throw std::invalid_argument("check_exact_update_discrepancy: mismatched shapes");
  auto G1 = gibbs_sampler(t1);
  auto G2 = gibbs_sampler(t2);
  double delta = tv_distance(t1.pi, t2.pi);
  for (int i = 0; i < t1.coords(); ++i) {
    auto k1 = make_kernel(t1, G1.coord_kernels[i]);
    auto k2 = make_kernel(t2, G2.coord_kernels[i]);
    for (double M : M_grid) {
      double disc = kernel_discrepancy(k1, k2, M);
      tracker.add(2.0 * M * delta - disc, [&] {
        std::ostringstream os;
        os << "exact-update discrepancy coord=" << i << " M=" << M << " delta=" << delta;
        return os.str();
      });
    }
  }
}

void check_exact_update_perturbation(const DiscreteTarget& t1, const DiscreteTarget& t2,
                                     const std::vector<double>& s_grid, SlackTracker& tracker) {
  if (t1.dims != t2.dims)
    throw std::invalid_argument("check_exact_update_perturbation: mismatched shapes");
  auto G1 = gibbs_sampler(t1);
  auto G2 = gibbs_sampler(t2);
  double delta = tv_distance(t1.pi, t2.pi);
  for (double s : s_grid) {
    if (!(s > 0.0) || s < delta || s >= 0.5) continue;
    auto r1 = s_conductance(G1.kernel, s);
    auto r2 = s_conductance(G2.kernel, s - delta);
    if (!r2.any_admissible) continue;
    double slack = r1.any_admissible ? r1.phi - (r2.phi - 4.0 * delta / s) : kInf;
    tracker.add(slack, [&] {
      std::ostringstream os;
      os << "exact-update perturbation s=" << s << " delta=" << delta;
      return os.str();
    });
  }
}

void check_product_chain_bound(const std::vector<DiscreteKernel>& factors, SlackTracker& tracker) {
  DiscreteKernel prod = product_kernel(factors);
  double worst = kInf;
  for (const auto& f : factors) {
    auto r = s_conductance(f, 0.0);
    worst = std::min(worst, r.phi);
  }
  auto rp = s_conductance(prod, 0.0);
  if (!rp.any_admissible || !std::isfinite(worst)) return;
  tracker.add(rp.phi - 0.25 * worst * worst, [&] {
    std::ostringstream os;
    os << "product chain bound, factors=" << factors.size();
    return os.str();
  });
}

void check_collapse_mixing(const DiscreteTarget& target, const std::vector<int>& t_map,
                           const std::vector<double>& eps_grid, const std::vector<double>& M_grid,
                           SlackTracker& tracker) {
  auto col = collapse_two_block(target, t_map);
  if (!col.premise_holds)
    throw std::invalid_argument("check_collapse_mixing: the collapse premise does not hold");
  auto G = gibbs_sampler(target);
  for (double eps : eps_grid) {
    for (double M : M_grid) {
      auto m1 = exact_mixing_time(G.kernel, eps, M);
      auto m2 = exact_mixing_time(col.collapsed_gibbs.kernel, eps, M);
      if (!m1.converged || !m2.converged) continue;
      tracker.add(-std::abs(static_cast<double>(m1.t - m2.t)), [&] {
        std::ostringstream os;
        os << "collapse mixing equality eps=" << eps << " M=" << M << " t=" << m1.t << " vs "
           << m2.t;
        return os.str();
      });
    }
  }
}

}  // namespace cwmc

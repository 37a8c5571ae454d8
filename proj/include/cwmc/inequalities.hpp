#pragma once

#include <string>
#include <vector>

#include "cwmc/conductance.hpp"
#include "cwmc/discrete.hpp"
#include "cwmc/mathutil.hpp"

namespace cwmc {

// Accumulates lhs - rhs slacks of an inequality over many instances; a
// negative minimum beyond tolerance marks a violation.
struct SlackTracker {
  std::string name;
  long checks = 0;
  double min_slack = kInf;
  std::string worst_note;

  explicit SlackTracker(std::string n = "") : name(std::move(n)) {}

  void add(double slack) {
    ++checks;
    if (slack < min_slack) min_slack = slack;
  }

  template <class NoteFn>
  void add(double slack, NoteFn&& note_fn) {
    ++checks;
    if (slack < min_slack) {
      min_slack = slack;
      worst_note = note_fn();
    }
  }

  bool ok(double tol) const { return checks == 0 || min_slack >= -tol; }
};

// A Metropolis-within-Gibbs chain P paired with the exact Gibbs chain G on the
// same target and weights, plus a warm region K.
struct MwgInstance {
  RandomScanDiscrete P;
  RandomScanDiscrete G;
  std::vector<bool> K;
  double pi_Kc = 0.0;
  std::string kind;
};

struct MwgOptions {
  int min_coords = 2;
  int max_coords = 3;
  int max_levels = 4;
  bool imh_lazyrwm_only = false;
  bool uniform_weights = true;
};

// Random strictly positive target on 2-3 coordinates (at most 16 states) with
// randomly chosen positive-semidefinite conditional updates per coordinate.
MwgInstance random_mwg_instance(Rng& rng, bool uniform_weights);
MwgInstance random_mwg_instance(Rng& rng, const MwgOptions& opts);

// --- per-set flux inequalities ------------------------------------------------

// For every coordinate i and every subset A:
//   P_i(dA) >= kappa_i(P_i, K) * (G_i(dA) - pi(A cap K^c))   -> flux_tracker
//   G_i(dA) >= P_i(dA)                                       -> domination_tracker
void check_coordinate_flux_bound(const MwgInstance& inst, SlackTracker& flux_tracker,
                                 SlackTracker& domination_tracker);

// --- conductance inequalities ---------------------------------------------------

// Phi_s(G) >= Phi_s(P) on a grid of s values
void check_conductance_domination(const MwgInstance& inst, const std::vector<double>& s_grid,
                                  SlackTracker& tracker);

// Phi_s(P) >= kappa(P, X) Phi_s(G), and for s > 0 the warm-region form
// Phi_s(P) >= kappa(P, K) Phi_s(G) - (pi(K^c)/s) sum_i w_i kappa_i(P_i, K)
void check_conductance_transfer(const MwgInstance& inst, const std::vector<double>& s_grid,
                                SlackTracker& tracker);

// Shifted-denominator profile: with PhiAlt_s = inf flux/(pi(A)-s),
//   PhiAlt_s(P) >= kappa(P, X) PhiAlt_s(G)
//   PhiAlt_s(P) >= kappa(P, K) (2(s-s')/(1-2s)) PhiAlt_{s'}(G)
//                  - (2 pi(K^c)/(1-2s)) (1/d) sum_i kappa_i(P_i, K),  s' < s
// (the second form only for uniform update weights)
void check_shifted_conductance_transfer(const MwgInstance& inst, const std::vector<double>& s_grid,
                                        SlackTracker& tracker);

// Mixtures c G_i + (1-c) Id achieve the transfer bound with equality and have
// conditional conductance exactly c; tracker records -(absolute error).
void check_identity_mixture_tightness(Rng& rng, double c, const std::vector<double>& s_grid,
                                      SlackTracker& tracker);

// --- warm-start mixing bounds ---------------------------------------------------

// For reversible positive-semidefinite kernels and M-warm starts:
//   sup_mu ||mu P^t - pi||_TV <= M s + M (1 - Phi_s^2/2)^t, and
//   t_mix(eps, M) <= ceil((log 2M - log eps)/(-log(1 - Phi_s^2/2))) at s = eps/(2M)
void check_warm_mixing_bound(const DiscreteKernel& k, const std::vector<double>& s_grid,
                             const std::vector<double>& M_grid, const std::vector<long>& t_grid,
                             SlackTracker& tv_tracker, SlackTracker& tmix_tracker);

// For reversible kernels, restricted starts stay far from pi:
//   ||mu_A P^t - pi||_TV >= 1/2 - t flux(A)/pi(A) whenever pi(A) <= 1/2
void check_restricted_start_lower_bound(const DiscreteKernel& k, long t_max,
                                        SlackTracker& tracker);

// Phi_s(P) >= (1/2 - eps) / t_mix(P, eps, 1/s)
void check_conductance_from_mixing(const DiscreteKernel& k, const std::vector<double>& s_grid,
                                   const std::vector<double>& eps_grid, SlackTracker& tracker);

// --- perturbation bounds ---------------------------------------------------------

// With delta = ||pi1 - pi2||_TV and s >= delta:
//   Phi_s(P1) >= Phi_{s-delta}(P2) - Delta(P1, P2, 1/s) - 2 delta / s
void check_perturbed_conductance(const DiscreteKernel& P1, const DiscreteKernel& P2,
                                 const std::vector<double>& s_grid, SlackTracker& tracker);

// Single-coordinate exact-update kernels of nearby targets:
//   Delta(G1_i, G2_i, M) <= 2 M delta
void check_exact_update_discrepancy(const DiscreteTarget& t1, const DiscreteTarget& t2,
                                    const std::vector<double>& M_grid, SlackTracker& tracker);

// Exact-update random scans of nearby targets: Phi_s(G1) >= Phi_{s-delta}(G2) - 4 delta / s
void check_exact_update_perturbation(const DiscreteTarget& t1, const DiscreteTarget& t2,
                                     const std::vector<double>& s_grid, SlackTracker& tracker);

// Simultaneous independent moves: Phi(prod P_j) >= min_j Phi(P_j)^2 / 4
void check_product_chain_bound(const std::vector<DiscreteKernel>& factors, SlackTracker& tracker);

// premise-respecting collapse keeps exact mixing times equal
void check_collapse_mixing(const DiscreteTarget& target, const std::vector<int>& t_map,
                           const std::vector<double>& eps_grid, const std::vector<double>& M_grid,
                           SlackTracker& tracker);

}  // namespace cwmc

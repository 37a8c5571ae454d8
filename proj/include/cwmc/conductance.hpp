#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "cwmc/discrete.hpp"

namespace cwmc {

// mass flowing out of the set in one step: sum_{x in A} pi(x) P(x, A^c)
double flux(const DiscreteKernel& k, std::uint32_t mask);
double set_mass(const DiscreteTarget& t, std::uint32_t mask);

// Both restricted-conductance profiles at level s in [0, 1/2):
//   phi     = inf flux(A)/pi(A)        over s < pi(A) <= 1/2
//   phi_alt = inf flux(A)/(pi(A) - s)  over the same family
// Ties between argmin sets are broken toward the set containing the lowest
// differing state index. Infinite when no admissible set exists.
struct SConductanceResult {
  double s = 0.0;
  double phi = 0.0;
  double phi_alt = 0.0;
  std::uint32_t argmin = 0;
  std::uint32_t argmin_alt = 0;
  bool any_admissible = false;
};

SConductanceResult s_conductance(const DiscreteKernel& k, double s);
std::vector<SConductanceResult> s_conductance_profile(const DiscreteKernel& k,
                                                      const std::vector<double>& s_grid);

// kappa of a small row-stochastic matrix K leaving p invariant:
//   inf over B with p(B) in (0,1) of flux_K(B) / (p(B) p(B^c)).
// Infinite when no such B exists (point-mass p).
double normalized_kappa(const Eigen::MatrixXd& K, const Eigen::VectorXd& p);

// worst kappa over the conditional kernels of coordinate i, restricted to
// slices that contain at least one state of K
double conditional_conductance(const RandomScanDiscrete& rs, int i, const std::vector<bool>& K);
double conditional_conductance(const RandomScanDiscrete& rs, int i);
// min over coordinates
double kappa_min(const RandomScanDiscrete& rs, const std::vector<bool>& K);
double kappa_min(const RandomScanDiscrete& rs);

// --- exact total-variation mixing --------------------------------------------

double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// sup over the warm polytope {0 <= mu <= M pi, sum mu = 1} of ||mu Pt - pi||_TV
double worst_warm_tv(const DiscreteTarget& t, const Eigen::MatrixXd& Pt, double M);

struct MixingResult {
  bool converged = false;
  long t = 0;
  double tv = 0.0;  // distance at the reported time
};

// smallest t with sup_{M-warm mu} ||mu P^t - pi||_TV <= eps
MixingResult exact_mixing_time(const DiscreteKernel& k, double eps, double M,
                               long cap = 1000000);
MixingResult exact_mixing_time_from(const DiscreteKernel& k, const Eigen::VectorXd& mu,
                                    double eps, long cap = 1000000);

// sup over the M-warm polytope of pi1 of ||mu P1 - mu P2||_TV
double kernel_discrepancy(const DiscreteKernel& P1, const DiscreteKernel& P2, double M);

// --- two-block collapse -------------------------------------------------------
//
// For a two-coordinate target and a map t_map on the first coordinate's values,
// checks that the conditional law of the second coordinate given the first
// depends on the first only through t_map, and if so builds the pushforward
// target on (t, x2) whose two-block Gibbs inherits the original's mixing.
struct CollapseResult {
  bool premise_holds = false;
  double premise_residual = 0.0;
  int witness_u = -1;
  int witness_v = -1;
  DiscreteTarget collapsed;
  RandomScanDiscrete collapsed_gibbs;
};

CollapseResult collapse_two_block(const DiscreteTarget& target, const std::vector<int>& t_map,
                                  double tol = 1e-12);

// visits every nonempty subset in Gray-code order, maintaining flux for a list
// of kernels on a shared target plus the masked mass sum_{x in A, mark x} pi(x)
void scan_subsets(const DiscreteTarget& t, const std::vector<const Eigen::MatrixXd*>& kernels,
                  const std::vector<bool>& mark,
                  const std::function<void(std::uint32_t mask, const double* fluxes, double pi_a,
                                           double pi_a_marked)>& visit);

}  // namespace cwmc

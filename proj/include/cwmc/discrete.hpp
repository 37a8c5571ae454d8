#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cwmc/rng.hpp"

namespace cwmc {

// Product-space distribution on dims[0] x ... x dims[d-1] states, flattened
// with coordinate 0 fastest. pi may contain exact zeros but must sum to ~1.
struct DiscreteTarget {
  std::vector<int> dims;
  Eigen::VectorXd pi;

  int states() const { return static_cast<int>(pi.size()); }
  int coords() const { return static_cast<int>(dims.size()); }

  int stride(int i) const {
    int s = 1;
    for (int k = 0; k < i; ++k) s *= dims[k];
    return s;
  }

  int value_of(int state, int i) const { return (state / stride(i)) % dims[i]; }

  int with_value(int state, int i, int v) const {
    int st = stride(i);
    return state + (v - value_of(state, i)) * st;
  }

  int slices(int i) const { return states() / dims[i]; }

  // index of the slice obtained by deleting coordinate i
  int slice_of(int state, int i) const {
    int st = stride(i);
    return state % st + (state / (st * dims[i])) * st;
  }

  int state_in_slice(int slice, int i, int v) const {
    int st = stride(i);
    return slice % st + v * st + (slice / st) * st * dims[i];
  }

  double slice_mass(int i, int slice) const {
    double m = 0.0;
    for (int v = 0; v < dims[i]; ++v) m += pi[state_in_slice(slice, i, v)];
    return m;
  }

  // normalized conditional of coordinate i on a slice; throws on zero mass
  Eigen::VectorXd conditional(int i, int slice) const;

  void validate() const;
};

DiscreteTarget make_target(std::vector<int> dims, Eigen::VectorXd pi);

// strictly positive random target: iid Exp(1) weights plus a floor, normalized
DiscreteTarget random_target(const std::vector<int>& dims, Rng& rng, double floor_frac = 1e-3);

// Row-stochastic kernel on a target, with reversibility / positive
// semidefiniteness diagnostics computed on the support of pi.
struct DiscreteKernel {
  DiscreteTarget target;
  Eigen::MatrixXd P;
  double row_residual = 0.0;
  double stationarity_residual = 0.0;  // max |(pi P - pi)_y|
  double reversibility_residual = 0.0;
  bool reversible = false;
  double min_eigenvalue = 0.0;  // of the symmetrized kernel on the support
  bool psd = false;
  double spectral_gap = 0.0;  // 1 - lambda_2, meaningful when reversible
};

DiscreteKernel make_kernel(DiscreteTarget target, Eigen::MatrixXd P,
                           double rev_tol = 1e-12, double psd_tol = 1e-10);

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& P, long t);

// --- single-coordinate conditional update matrices -------------------------
//
// Each builder maps a normalized conditional p (length n_i) to an n_i x n_i
// row-stochastic matrix that leaves p invariant. These are the ground-truth
// transition laws the continuous-state updates are tested against.

using ConditionalBuilder = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

Eigen::MatrixXd exact_conditional_matrix(const Eigen::VectorXd& p);
Eigen::MatrixXd imh_conditional_matrix(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
// independence proposal concentrated at the mode of p with the given precision
Eigen::MatrixXd mode_imh_conditional_matrix(const Eigen::VectorXd& p, double precision);
// nearest-neighbour random walk (propose v-1 or v+1 with prob 1/2 each, reject
// outside the range), Metropolis acceptance min{1, p_y/p_x}
Eigen::MatrixXd rwm_conditional_matrix(const Eigen::VectorXd& p);
// nearest-neighbour proposal with Barker acceptance p_y/(p_x + p_y)
Eigen::MatrixXd barker_conditional_matrix(const Eigen::VectorXd& p);

Eigen::MatrixXd lazy_matrix(const Eigen::MatrixXd& K);
Eigen::MatrixXd mix_with_identity(const Eigen::MatrixXd& K, double c);

ConditionalBuilder exact_builder();
ConditionalBuilder imh_builder(const Eigen::VectorXd& q);
ConditionalBuilder mode_imh_builder(double precision);
ConditionalBuilder rwm_builder();
ConditionalBuilder barker_builder();
ConditionalBuilder lazy_of(ConditionalBuilder inner);
ConditionalBuilder mix_identity_of(ConditionalBuilder inner, double c);
ConditionalBuilder repeated_of(ConditionalBuilder inner, int k);

// --- random-scan assembly ---------------------------------------------------

struct RandomScanDiscrete {
  DiscreteTarget target;
  Eigen::VectorXd weights;  // positive, sums to 1
  // full-space kernel of a single coordinate-i update
  std::vector<Eigen::MatrixXd> coord_kernels;
  // cond_kernels[i][slice]: the n_i x n_i conditional transition matrix
  std::vector<std::vector<Eigen::MatrixXd>> cond_kernels;
  DiscreteKernel kernel;  // sum_i weights[i] * coord_kernels[i]
};

RandomScanDiscrete assemble_random_scan(const DiscreteTarget& target,
                                        const std::vector<ConditionalBuilder>& builders,
                                        Eigen::VectorXd weights = Eigen::VectorXd());

// exact-conditional special case (random-scan Gibbs)
RandomScanDiscrete gibbs_sampler(const DiscreteTarget& target,
                                 Eigen::VectorXd weights = Eigen::VectorXd());

// Kernel of simultaneous independent moves: the Kronecker product of the
// factors, stationary for the product of their targets. Dimension lists are
// concatenated.
DiscreteKernel product_kernel(const std::vector<DiscreteKernel>& factors);

// Three-state-per-coordinate family with a vanishing isolated atom at (2,2):
// pi_n = (1 - eps_n) * Uniform{0,1}^2 + eps_n * delta_{(2,2)}, eps_n = 0.1/2^n
DiscreteTarget isolated_atom_target(int n);
RandomScanDiscrete isolated_atom_gibbs(int n);

}  // namespace cwmc

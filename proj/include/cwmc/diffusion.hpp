#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "cwmc/rng.hpp"

namespace cwmc {

// Drift is b(theta, x) = theta * h(x); dh is h'.
struct DriftFamily {
  std::function<double(double)> h;
  std::function<double(double)> dh;
  std::string name;
};

DriftFamily sine_drift();  // h(x) = sin(x)
DriftFamily ou_drift();    // h(x) = -x

// Observations of the diffusion at N equally spaced times 0, T/(N-1), ..., T.
struct DiffusionData {
  Eigen::VectorXd obs;
  double T = 1.0;

  int n_obs() const { return static_cast<int>(obs.size()); }
  int n_segments() const { return n_obs() - 1; }
  double seg_len() const { return T / n_segments(); }
};

// Euler-Maruyama simulation on a fine grid, keeping every (fine_per_obs)-th
// point as an observation.
DiffusionData simulate_diffusion_em(const DriftFamily& drift, double theta, double x0, double T,
                                    int n_obs, int fine_per_obs, Rng& rng);

// Brownian bridge on R+1 grid points over an interval of length seg_len,
// filled left to right from the recursive conditionals
//   Y_{i+1} | Y_i ~ N(Y_i + (end - Y_i)/(R - i), delta * (R - i - 1)/(R - i)).
Eigen::VectorXd sample_brownian_bridge(double start, double end, double seg_len, int R, Rng& rng);

// Log Girsanov weight of one imputed segment by the left-endpoint rule:
//   -1/2 * sum_{k=0}^{R-1} [b(Y_k)^2 - b'(Y_k)] * delta,  b = theta * h.
double girsanov_log_weight(const Eigen::VectorXd& seg, double delta, const DriftFamily& drift,
                           double theta);

// Quadratic coefficients of theta in the summed log weights: the log
// likelihood of theta given the imputed path is -Sa/2 * theta^2 + Sb/2 * theta.
struct ThetaCoeffs {
  double Sa = 0.0;
  double Sb = 0.0;
};

ThetaCoeffs girsanov_theta_coeffs(const Eigen::MatrixXd& path, double delta,
                                  const DriftFamily& drift);

// Truncated normal draw on [lo, hi]: rejection from the untruncated normal
// with a bounded number of tries, then inverse CDF.
double draw_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng);

// Maps observations of dX = b dt + sigma(X) dB to the unit-coefficient scale
// eta(x) = int_z^x du / sigma(u), integrated adaptively. An empty sigma is the
// identity. sigma must stay positive between z and every observation.
Eigen::VectorXd lamperti_transform(const Eigen::VectorXd& obs,
                                   const std::function<double(double)>& sigma = nullptr,
                                   double z = 0.0, double tol = 1e-10);

// Data-augmentation sampler for theta with Brownian-bridge imputation. One
// sweep flips a fair coin: heads redraws theta from its truncated Gaussian
// conditional, tails proposes an independent Brownian bridge for every
// segment, each accepted with the Girsanov weight ratio.
class DiffusionDaSampler {
 public:
  DiffusionDaSampler(DiffusionData data, DriftFamily drift, int R, double prior_mean,
                     double prior_var, double s_lo, double s_hi);

  void init_path(Rng& rng);
  void sweep(Rng& rng);

  double theta() const { return theta_; }
  void set_theta(double t);
  const Eigen::MatrixXd& path() const { return path_; }
  double bridge_acceptance() const {
    return bridge_proposals_ == 0
               ? 0.0
               : static_cast<double>(bridge_accepts_) / static_cast<double>(bridge_proposals_);
  }
  long bridge_proposals() const { return bridge_proposals_; }

  void theta_step(Rng& rng);
  void bridges_step(Rng& rng);

 private:
  DiffusionData data_;
  DriftFamily drift_;
  int R_;
  double prior_mean_, prior_var_, s_lo_, s_hi_;
  double theta_ = 0.0;
  Eigen::MatrixXd path_;  // n_segments x (R+1); first and last columns are observations
  long bridge_proposals_ = 0;
  long bridge_accepts_ = 0;
};

}  // namespace cwmc

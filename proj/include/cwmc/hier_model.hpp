#pragma once

#include <string>
#include <vector>

#include "cwmc/model.hpp"
#include "cwmc/normal_gamma.hpp"
#include "cwmc/quadrature.hpp"

namespace cwmc {

// Grouped binary observations: J groups of m Bernoulli outcomes whose logits
// are x_i . theta_j. With l = 1 the design is a column of ones and a group is
// summarized by its success count.
struct HierData {
  int J = 0;
  int m = 0;
  int l = 1;
  Eigen::MatrixXd y;               // J x m in {0,1}
  bool shared_x = true;
  std::vector<Eigen::MatrixXd> X;  // one m x l matrix if shared, else J of them
  Eigen::VectorXi counts;          // per-group success counts

  const Eigen::MatrixXd& X_of(int j) const { return shared_x ? X[0] : X[static_cast<size_t>(j)]; }
  void refresh_counts();
};

// theta*_jk ~ N(mu_star_k, 1/tau_star_k). Column 0 of the design is an
// intercept; when l > 1 the remaining columns are Unif[-5,5] (a single shared
// m x l matrix unless per_group_covariates).
HierData generate_hier_dataset(int J, int m, int l, const Eigen::VectorXd& mu_star,
                               const Eigen::VectorXd& tau_star, Rng& rng,
                               bool per_group_covariates = false);
HierData generate_hier_dataset(int J, int m, int l, double mu_star, double tau_star, Rng& rng,
                               bool per_group_covariates = false);

void write_hier_dataset_csv(const HierData& data, const std::string& path);
HierData read_hier_dataset_csv(const std::string& path);

// Posterior over [theta_1 .. theta_J, mu(l), tau(l)] for the random-effects
// logistic model: theta_jk | psi ~ N(mu_k, 1/tau_k) independently, NormalGamma
// prior on each (mu_k, tau_k). Sites 0..J-1 are the theta_j (dim l); site J is
// psi (dim 2l, conjugate).
class HierModel : public BlockedTarget {
 public:
  HierModel(HierData data, NormalGammaPrior prior = {});

  int dim() const override { return data_.J * data_.l + 2 * data_.l; }
  int num_sites() const override { return data_.J + 1; }
  int site_offset(int s) const override;
  int site_dim(int s) const override;

  double site_logpdf(int s, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                     Eigen::VectorXd* grad, Telemetry* tel) const override;
  bool site_in_domain(int s, const Eigen::VectorXd& v) const override;
  SiteCertificates site_certificates(int s, const Eigen::VectorXd& x) const override;
  bool has_site_hessian(int s) const override { return s < data_.J; }
  Eigen::MatrixXd site_hessian(int s, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& v) const override;
  bool has_site_exact_draw(int s) const override { return s == data_.J; }
  void site_exact_draw(int s, Eigen::VectorXd& x, Rng& rng, Telemetry* tel) const override;
  Eigen::VectorXd site_search_origin(int s, const Eigen::VectorXd& x) const override;
  std::uint64_t site_signature(int s, const Eigen::VectorXd& x) const override;
  std::string param_name(int index) const override;

  const HierData& data() const { return data_; }
  const NormalGammaPrior& prior() const { return prior_; }
  int psi_site() const { return data_.J; }
  Eigen::VectorXd mu_of(const Eigen::VectorXd& x) const;
  Eigen::VectorXd tau_of(const Eigen::VectorXd& x) const;

 private:
  HierData data_;
  NormalGammaPrior prior_;
  std::vector<double> lam_max_;  // largest eigenvalue of X^T X per design matrix
};

// Log marginal likelihood of (mu, tau) with the theta integrated out by
// adaptive Simpson quadrature (tolerance 1e-8 per group). Only l = 1.
double log_marginal_likelihood_psi(const HierData& data, double mu, double tau,
                                   double tol = 1e-8);

// Same integral by 128-point Gauss-Hermite recentered at the integrand mode.
double log_marginal_group_gh(int count, int m, double mu, double tau, const GaussHermite& gh);

struct HierMle {
  double mu = 0.0;
  double tau = 1.0;
  bool converged = false;
  bool used_fallback = false;
};

// Maximum marginal likelihood over (mu, tau) by Nelder-Mead on (mu, log tau);
// falls back to a method-of-moments estimate with a warning when the
// optimizer fails. Only l = 1.
HierMle hier_mle(const HierData& data);

}  // namespace cwmc

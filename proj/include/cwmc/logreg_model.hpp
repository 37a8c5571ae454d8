#pragma once

#include "cwmc/model.hpp"

namespace cwmc {

// Bayesian logistic regression with an unknown prior scale:
//   beta | alpha ~ N(0, alpha * Sigma),  alpha ~ InvGamma(a0, b0),
//   y_i ~ Bernoulli(sigmoid(x_i . beta)),  Sigma = I/d.
//
// Centered parameterization: state [beta (d), alpha]; alpha | beta is
// conjugate inverse-gamma. Non-centered: state [xi (d), alpha] with
// beta = sqrt(alpha) xi; xi | alpha keeps a prior N(0, Sigma) and alpha
// enters the likelihood, so its conditional is not conjugate.
struct LogRegData {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // n, in {0,1}
};

// X entries iid N(0,1); beta* ~ N(0, alpha_star * I/d).
LogRegData generate_logreg_dataset(int n, int d, double alpha_star, Rng& rng);

class LogRegAlphaModel : public BlockedTarget {
 public:
  LogRegAlphaModel(LogRegData data, bool centered, double a0 = 1.0, double b0 = 1.0);

  int dim() const override { return d_ + 1; }
  int num_sites() const override { return 2; }
  int site_offset(int s) const override { return s == 0 ? 0 : d_; }
  int site_dim(int s) const override { return s == 0 ? d_ : 1; }

  double site_logpdf(int s, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                     Eigen::VectorXd* grad, Telemetry* tel) const override;
  bool site_in_domain(int s, const Eigen::VectorXd& v) const override;
  SiteCertificates site_certificates(int s, const Eigen::VectorXd& x) const override;
  bool has_site_hessian(int s) const override { return s == 0; }
  Eigen::MatrixXd site_hessian(int s, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& v) const override;
  bool has_site_exact_draw(int s) const override { return centered_ && s == 1; }
  void site_exact_draw(int s, Eigen::VectorXd& x, Rng& rng, Telemetry* tel) const override;
  std::string param_name(int index) const override;

  bool centered() const { return centered_; }
  int coef_dim() const { return d_; }
  const LogRegData& data() const { return data_; }

 private:
  LogRegData data_;
  int n_, d_;
  bool centered_;
  double a0_, b0_;
  double lam_max_;     // largest eigenvalue of X^T X
  double prior_prec_;  // Sigma^-1 = d * I
};

}  // namespace cwmc

#include "cwmc/logreg_model.hpp"

#include <cmath>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

LogRegData generate_logreg_dataset(int n, int d, double alpha_star, Rng& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("generate_logreg_dataset: bad sizes");
  LogRegData data;
  data.X.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) data.X(i, k) = rng.normal();
  double sd = std::sqrt(alpha_star / d);
  Eigen::VectorXd beta(d);
  for (int k = 0; k < d; ++k) beta[k] = sd * rng.normal();
  data.y.resize(n);
  for (int i = 0; i < n; ++i) data.y[i] = rng.uniform() < sigmoid(data.X.row(i).dot(beta)) ? 1.0 : 0.0;
  return data;
}

LogRegAlphaModel::LogRegAlphaModel(LogRegData data, bool centered, double a0, double b0)
    : data_(std::move(data)),
      n_(static_cast<int>(data_.X.rows())),
      d_(static_cast<int>(data_.X.cols())),
      centered_(centered),
      a0_(a0),
      b0_(b0),
      prior_prec_(static_cast<double>(data_.X.cols())) {
  if (data_.y.size() != n_) throw std::invalid_argument("LogRegAlphaModel: y size mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(data_.X.transpose() * data_.X);
  lam_max_ = es.eigenvalues().maxCoeff();
}

double LogRegAlphaModel::site_logpdf(int s, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                                     Eigen::VectorXd* grad, Telemetry* tel) const {
  if (tel) {
    tel->target_evals += 1;
    if (grad) tel->gradient_evals += 1;
  }
  double alpha = s == 0 ? x[d_] : v[0];
  if (!(alpha > 0.0)) return -kInf;
  if (s == 0) {
    // coefficient block given alpha
    if (v.size() != d_) throw std::invalid_argument("LogRegAlphaModel: bad coefficient size");
    double scale = centered_ ? 1.0 : std::sqrt(alpha);
    double lp = 0.0;
    if (grad) grad->setZero(d_);
    for (int i = 0; i < n_; ++i) {
      double eta = scale * data_.X.row(i).dot(v);
      lp += data_.y[i] * eta - log1pexp(eta);
      if (grad) grad->noalias() += scale * (data_.y[i] - sigmoid(eta)) * data_.X.row(i).transpose();
    }
    double pp = centered_ ? prior_prec_ / alpha : prior_prec_;
    lp -= 0.5 * pp * v.squaredNorm();
    if (grad) grad->noalias() -= pp * v;
    return lp;
  }
  // alpha given coefficients
  if (v.size() != 1) throw std::invalid_argument("LogRegAlphaModel: bad alpha size");
  Eigen::VectorXd coef = x.head(d_);
  if (grad) throw std::logic_error("LogRegAlphaModel: alpha gradient not implemented");
  double lp = -(a0_ + 1.0) * std::log(alpha) - b0_ / alpha;
  if (centered_) {
    lp += -0.5 * d_ * std::log(alpha) - 0.5 * prior_prec_ * coef.squaredNorm() / alpha;
  } else {
    double scale = std::sqrt(alpha);
    for (int i = 0; i < n_; ++i) {
      double eta = scale * data_.X.row(i).dot(coef);
      lp += data_.y[i] * eta - log1pexp(eta);
    }
  }
  return lp;
}

bool LogRegAlphaModel::site_in_domain(int s, const Eigen::VectorXd& v) const {
  if (s == 1) return v[0] > 0.0;
  return true;
}

SiteCertificates LogRegAlphaModel::site_certificates(int s, const Eigen::VectorXd& x) const {
  if (s != 0) return {};
  double alpha = x[d_];
  if (!(alpha > 0.0)) return {};
  if (centered_) return {true, prior_prec_ / alpha, prior_prec_ / alpha + 0.25 * lam_max_};
  return {true, prior_prec_, prior_prec_ + 0.25 * alpha * lam_max_};
}

Eigen::MatrixXd LogRegAlphaModel::site_hessian(int s, const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& v) const {
  if (s != 0) throw std::logic_error("LogRegAlphaModel: no Hessian for alpha site");
  double alpha = x[d_];
  double scale = centered_ ? 1.0 : std::sqrt(alpha);
  double pp = centered_ ? prior_prec_ / alpha : prior_prec_;
  Eigen::MatrixXd H = pp * Eigen::MatrixXd::Identity(d_, d_);
  for (int i = 0; i < n_; ++i) {
    double p = sigmoid(scale * data_.X.row(i).dot(v));
    H.noalias() += scale * scale * p * (1.0 - p) * data_.X.row(i).transpose() * data_.X.row(i);
  }
  return H;
}

void LogRegAlphaModel::site_exact_draw(int s, Eigen::VectorXd& x, Rng& rng, Telemetry* tel) const {
  if (!centered_ || s != 1)
    throw std::logic_error("LogRegAlphaModel: exact draw only for centered alpha");
  double a_n = a0_ + 0.5 * d_;
  double b_n = b0_ + 0.5 * prior_prec_ * x.head(d_).squaredNorm();
  double g = rng.gamma(a_n, b_n);
  x[d_] = 1.0 / g;
  if (tel) tel->exact_draws += 1;
}

std::string LogRegAlphaModel::param_name(int index) const {
  if (index < d_) return (centered_ ? "beta_" : "xi_") + std::to_string(index + 1);
  return "alpha";
}

}  // namespace cwmc

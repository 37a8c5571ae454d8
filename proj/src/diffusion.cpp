#include "cwmc/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "cwmc/mathutil.hpp"
#include "cwmc/quadrature.hpp"

namespace cwmc {

DriftFamily sine_drift() {
  return {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }, "sine"};
}

DriftFamily ou_drift() {
  return {[](double x) { return -x; }, [](double) { return -1.0; }, "ou"};
}

DiffusionData simulate_diffusion_em(const DriftFamily& drift, double theta, double x0, double T,
                                    int n_obs, int fine_per_obs, Rng& rng) {
  if (n_obs < 2) throw std::invalid_argument("simulate_diffusion_em: need at least 2 observations");
  if (fine_per_obs < 1) throw std::invalid_argument("simulate_diffusion_em: bad fine grid");
  DiffusionData data;
  data.T = T;
  data.obs.resize(n_obs);
  data.obs[0] = x0;
  double dt = T / ((n_obs - 1) * static_cast<double>(fine_per_obs));
  double sq = std::sqrt(dt);
  double x = x0;
  for (int s = 1; s < n_obs; ++s) {
    for (int i = 0; i < fine_per_obs; ++i) x += theta * drift.h(x) * dt + sq * rng.normal();
    data.obs[s] = x;
  }
  return data;
}

Eigen::VectorXd sample_brownian_bridge(double start, double end, double seg_len, int R, Rng& rng) {
  if (R < 1) throw std::invalid_argument("sample_brownian_bridge: R must be >= 1");
  if (!(seg_len > 0.0)) throw std::invalid_argument("sample_brownian_bridge: bad segment length");
  double delta = seg_len / R;
  Eigen::VectorXd y(R + 1);
  y[0] = start;
  y[R] = end;
  for (int i = 0; i + 1 < R; ++i) {
    double remain = static_cast<double>(R - i);
    double mean = y[i] + (end - y[i]) / remain;
    double var = delta * (remain - 1.0) / remain;
    y[i + 1] = mean + std::sqrt(var) * rng.normal();
  }
  return y;
}

double girsanov_log_weight(const Eigen::VectorXd& seg, double delta, const DriftFamily& drift,
                           double theta) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k + 1 < seg.size(); ++k) {
    double b = theta * drift.h(seg[k]);
    double bp = theta * drift.dh(seg[k]);
    acc += b * b - bp;
  }
  return -0.5 * acc * delta;
}

ThetaCoeffs girsanov_theta_coeffs(const Eigen::MatrixXd& path, double delta,
                                  const DriftFamily& drift) {
  ThetaCoeffs c;
  for (Eigen::Index s = 0; s < path.rows(); ++s)
    for (Eigen::Index k = 0; k + 1 < path.cols(); ++k) {
      double h = drift.h(path(s, k));
      c.Sa += h * h * delta;
      c.Sb += drift.dh(path(s, k)) * delta;
    }
  return c;
}

Eigen::VectorXd lamperti_transform(const Eigen::VectorXd& obs,
                                   const std::function<double(double)>& sigma, double z,
                                   double tol) {
  if (!sigma) return obs;
  auto inv = [&sigma](double u) {
    double s = sigma(u);
    if (!(s > 0.0)) throw std::domain_error("lamperti_transform: sigma must be positive");
    return 1.0 / s;
  };
  Eigen::VectorXd out(obs.size());
  for (Eigen::Index i = 0; i < obs.size(); ++i) {
    double x = obs[i];
    out[i] = x >= z ? adaptive_simpson(inv, z, x, tol) : -adaptive_simpson(inv, x, z, tol);
  }
  return out;
}

double draw_truncated_normal(double mean, double sd, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw std::invalid_argument("draw_truncated_normal: empty interval");
  if (!(sd > 0.0)) throw std::invalid_argument("draw_truncated_normal: bad sd");
  for (int tries = 0; tries < 50; ++tries) {
    double x = mean + sd * rng.normal();
    if (x >= lo && x <= hi) return x;
  }
  double plo = normal_cdf((lo - mean) / sd);
  double phi = normal_cdf((hi - mean) / sd);
  double u = plo + rng.uniform() * (phi - plo);
  u = std::min(std::max(u, 1e-300), 1.0 - 1e-16);
  double x = mean + sd * normal_quantile(u);
  return std::min(std::max(x, lo), hi);
}

DiffusionDaSampler::DiffusionDaSampler(DiffusionData data, DriftFamily drift, int R,
                                       double prior_mean, double prior_var, double s_lo,
                                       double s_hi)
    : data_(std::move(data)),
      drift_(std::move(drift)),
      R_(R),
      prior_mean_(prior_mean),
      prior_var_(prior_var),
      s_lo_(s_lo),
      s_hi_(s_hi) {
  if (R_ < 1) throw std::invalid_argument("DiffusionDaSampler: R must be >= 1");
  if (data_.n_obs() < 2) throw std::invalid_argument("DiffusionDaSampler: need 2+ observations");
  if (!(s_lo_ < s_hi_)) throw std::invalid_argument("DiffusionDaSampler: empty theta support");
  if (!(prior_var_ > 0.0)) throw std::invalid_argument("DiffusionDaSampler: bad prior variance");
  theta_ = std::min(std::max(prior_mean_, s_lo_), s_hi_);
  path_.resize(data_.n_segments(), R_ + 1);
  for (int s = 0; s < data_.n_segments(); ++s) {
    path_.row(s).setLinSpaced(R_ + 1, data_.obs[s], data_.obs[s + 1]);
  }
}

void DiffusionDaSampler::set_theta(double t) {
  if (t < s_lo_ || t > s_hi_) throw std::invalid_argument("set_theta: outside support");
  theta_ = t;
}

void DiffusionDaSampler::init_path(Rng& rng) {
  for (int s = 0; s < data_.n_segments(); ++s)
    path_.row(s) =
        sample_brownian_bridge(data_.obs[s], data_.obs[s + 1], data_.seg_len(), R_, rng)
            .transpose();
}

void DiffusionDaSampler::theta_step(Rng& rng) {
  double delta = data_.seg_len() / R_;
  ThetaCoeffs c = girsanov_theta_coeffs(path_, delta, drift_);
  double lambda = c.Sa + 1.0 / prior_var_;
  if (lambda < 0.0)
    throw std::runtime_error("theta_step: negative total precision (Sa=" + std::to_string(c.Sa) +
                             ")");
  if (lambda == 0.0) {
    theta_ = s_lo_ + rng.uniform() * (s_hi_ - s_lo_);
    return;
  }
  double mean = (0.5 * c.Sb + prior_mean_ / prior_var_) / lambda;
  theta_ = draw_truncated_normal(mean, 1.0 / std::sqrt(lambda), s_lo_, s_hi_, rng);
}

void DiffusionDaSampler::bridges_step(Rng& rng) {
  double delta = data_.seg_len() / R_;
  for (int s = 0; s < data_.n_segments(); ++s) {
    Eigen::VectorXd prop =
        sample_brownian_bridge(data_.obs[s], data_.obs[s + 1], data_.seg_len(), R_, rng);
    double w_new = girsanov_log_weight(prop, delta, drift_, theta_);
    double w_old = girsanov_log_weight(path_.row(s).transpose(), delta, drift_, theta_);
    bridge_proposals_ += 1;
    if (std::log(rng.uniform()) < w_new - w_old) {
      path_.row(s) = prop.transpose();
      bridge_accepts_ += 1;
    }
  }
}

void DiffusionDaSampler::sweep(Rng& rng) {
  if (rng.bernoulli(0.5)) {
    theta_step(rng);
  } else {
    bridges_step(rng);
  }
}

}  // namespace cwmc

#include "cwmc/updates.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cwmc/ars.hpp"
#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

std::string dump_state(const BlockedTarget& target, int site, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << "site=" << site << " value=[" << v.transpose() << "] state=[" << x.transpose() << "]";
  (void)target;
  return os.str();
}

}  // namespace

void ExactConjugateUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x,
                                 Rng& rng, Telemetry& tel, VisitCache*) const {
  target.site_exact_draw(site, x, rng, &tel);
}

Eigen::VectorXd find_site_mode(const BlockedTarget& target, int site, const Eigen::VectorXd& x,
                               Eigen::VectorXd v, Telemetry& tel, double grad_tol, int max_iter) {
  const int d = target.site_dim(site);
  if (v.size() != d) throw std::invalid_argument("find_site_mode: bad start dimension");
  const bool have_hess = target.has_site_hessian(site);
  SiteCertificates cert = target.site_certificates(site, x);
  if (!have_hess && !cert.valid)
    throw std::logic_error("find_site_mode: site has neither Hessian nor certificate");
  Eigen::VectorXd grad(d), cand(d), step(d);
  double h = target.site_logpdf(site, x, v, &grad, &tel);
  for (int it = 0; it < max_iter; ++it) {
    if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) return v;
    if (have_hess) {
      Eigen::MatrixXd H = target.site_hessian(site, x, v);
      step = H.llt().solve(grad);
    } else {
      step = grad / cert.L;
    }
    // near the optimum a productive Newton step changes h by less than
    // rounding noise, so the descent test needs a noise-sized slack
    const double slack = 1e-12 * (1.0 + std::abs(h));
    double alpha = 1.0;
    for (int bt = 0; bt < 40; ++bt) {
      cand = v + alpha * step;
      Eigen::VectorXd g2(d);
      double h2 = target.site_logpdf(site, x, cand, &g2, &tel);
      if (h2 >= h - slack || !std::isfinite(h)) {
        v = cand;
        h = h2;
        grad = g2;
        break;
      }
      alpha *= 0.5;
      if (bt == 39)
        throw std::runtime_error("find_site_mode: line search failed, " +
                                 dump_state(target, site, x, v));
    }
  }
  throw std::runtime_error("find_site_mode: no convergence in " + std::to_string(max_iter) +
                           " iterations, " + dump_state(target, site, x, v));
}

void ExactArsUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                           Telemetry& tel, VisitCache* cache) const {
  if (target.site_dim(site) != 1)
    throw std::invalid_argument("ExactArsUpdate: sites must be one-dimensional");
  std::shared_ptr<ArsEnvelope> env;
  std::uint64_t sig = cache ? target.site_signature(site, x) : 0;
  if (sig != 0) {
    auto it = cache->find(sig);
    if (it != cache->end()) env = std::static_pointer_cast<ArsEnvelope>(it->second);
  }
  if (!env) {
    if (v_buf_.size() != 1) {
      v_buf_.resize(1);
      grad_buf_.resize(1);
    }
    auto logdens = [&target, site, &x, &tel, this](double v, double* dh) {
      v_buf_[0] = v;
      double h = target.site_logpdf(site, x, v_buf_, &grad_buf_, &tel);
      *dh = grad_buf_[0];
      return h;
    };
    SiteCertificates cert = target.site_certificates(site, x);
    std::vector<double> init;
    if (cert.valid && cert.m > 0.0) {
      Eigen::VectorXd mode =
          find_site_mode(target, site, x, target.site_value(site, x), tel, 1e-8, 100);
      double half = 2.0 / std::sqrt(cert.m);
      init = {mode[0] - half, mode[0] + half};
    } else {
      double origin = target.site_search_origin(site, x)[0];
      init = {origin - 1.0, origin + 1.0};
    }
    env = std::make_shared<ArsEnvelope>(logdens, -kInf, kInf, init);
    if (sig != 0) (*cache)[sig] = env;
  }
  double v = env->sample(rng);
  tel.exact_draws += 1;
  Eigen::VectorXd vv(1);
  vv[0] = v;
  target.set_site_value(site, x, vv);
}

void ImhUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                      Telemetry& tel, VisitCache*) const {
  Proposal q = factory_(target, site, x);
  Eigen::VectorXd v = target.site_value(site, x);
  Eigen::VectorXd y = q.draw(rng);
  tel.proposals += 1;
  double log_alpha;
  if (!target.site_in_domain(site, y)) {
    log_alpha = -kInf;
  } else {
    double hy = target.site_logpdf(site, x, y, nullptr, &tel);
    double hx = target.site_logpdf(site, x, v, nullptr, &tel);
    log_alpha = hy - hx + q.logpdf(v) - q.logpdf(y);
  }
  if (std::log(rng.uniform()) < log_alpha) {
    target.set_site_value(site, x, y);
    tel.accepts += 1;
  }
}

void ImhAtModeUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                            Telemetry& tel, VisitCache*) const {
  SiteCertificates cert = target.site_certificates(site, x);
  if (!cert.valid || !(cert.m > 0.0))
    throw std::logic_error("ImhAtModeUpdate: site lacks a strong-concavity certificate");
  const int d = target.site_dim(site);
  Eigen::VectorXd mode = find_site_mode(target, site, x, target.site_value(site, x), tel);
  tel.mode_finds += 1;
  double sd = 1.0 / std::sqrt(cert.m);
  Eigen::VectorXd y(d), v = target.site_value(site, x);
  for (int k = 0; k < d; ++k) y[k] = mode[k] + sd * rng.normal();
  tel.proposals += 1;
  double log_alpha;
  if (!target.site_in_domain(site, y)) {
    log_alpha = -kInf;
  } else {
    double hy = target.site_logpdf(site, x, y, nullptr, &tel);
    double hx = target.site_logpdf(site, x, v, nullptr, &tel);
    double lq_y = -0.5 * cert.m * (y - mode).squaredNorm();
    double lq_v = -0.5 * cert.m * (v - mode).squaredNorm();
    log_alpha = hy - hx + lq_v - lq_y;
  }
  if (std::log(rng.uniform()) < log_alpha) {
    target.set_site_value(site, x, y);
    tel.accepts += 1;
  }
}

RwmUpdate RwmUpdate::with_fixed_sigma(double sigma) {
  RwmUpdate u(0.0);
  u.fixed_sigma_ = sigma;
  return u;
}

void RwmUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                      Telemetry& tel, VisitCache*) const {
  const int d = target.site_dim(site);
  double sigma = fixed_sigma_;
  if (!(sigma > 0.0)) {
    SiteCertificates cert = target.site_certificates(site, x);
    if (!cert.valid || !(cert.L > 0.0))
      throw std::logic_error("RwmUpdate: no certificate and no fixed step size");
    sigma = std::sqrt(eta_ / (d * cert.L));
  }
  Eigen::VectorXd v = target.site_value(site, x);
  Eigen::VectorXd y(d);
  for (int k = 0; k < d; ++k) y[k] = v[k] + sigma * rng.normal();
  tel.proposals += 1;
  double log_alpha;
  if (!target.site_in_domain(site, y)) {
    log_alpha = -kInf;
  } else {
    double hy = target.site_logpdf(site, x, y, nullptr, &tel);
    double hx = target.site_logpdf(site, x, v, nullptr, &tel);
    log_alpha = hy - hx;
  }
  if (std::log(rng.uniform()) < log_alpha) {
    target.set_site_value(site, x, y);
    tel.accepts += 1;
  }
}

BarkerUpdate BarkerUpdate::with_fixed_sigma(double sigma) {
  BarkerUpdate u(0.0);
  u.fixed_sigma_ = sigma;
  return u;
}

void BarkerUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                         Telemetry& tel, VisitCache*) const {
  const int d = target.site_dim(site);
  double sigma = fixed_sigma_;
  if (!(sigma > 0.0)) {
    SiteCertificates cert = target.site_certificates(site, x);
    if (!cert.valid || !(cert.L > 0.0))
      throw std::logic_error("BarkerUpdate: no certificate and no fixed step size");
    sigma = std::sqrt(eta_ / (d * cert.L));
  }
  Eigen::VectorXd v = target.site_value(site, x);
  if (grad_x_.size() != d) {
    grad_x_.resize(d);
    grad_y_.resize(d);
    v_y_.resize(d);
  }
  double hx = target.site_logpdf(site, x, v, &grad_x_, &tel);
  for (int k = 0; k < d; ++k) {
    double z = sigma * rng.normal();
    double p_plus = sigmoid(z * grad_x_[k]);
    double b = rng.uniform() < p_plus ? 1.0 : -1.0;
    v_y_[k] = v[k] + b * z;
  }
  tel.proposals += 1;
  double log_alpha;
  if (!target.site_in_domain(site, v_y_)) {
    log_alpha = -kInf;
  } else {
    double hy = target.site_logpdf(site, x, v_y_, &grad_y_, &tel);
    log_alpha = hy - hx;
    for (int k = 0; k < d; ++k) {
      double c = v_y_[k] - v[k];
      log_alpha += log1pexp(-c * grad_x_[k]) - log1pexp(c * grad_y_[k]);
    }
  }
  if (std::log(rng.uniform()) < log_alpha) {
    target.set_site_value(site, x, v_y_);
    tel.accepts += 1;
  }
}

void LogScaleRwmUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                              Telemetry& tel, VisitCache*) const {
  if (target.site_dim(site) != 1)
    throw std::invalid_argument("LogScaleRwmUpdate: sites must be one-dimensional");
  Eigen::VectorXd v = target.site_value(site, x);
  if (!(v[0] > 0.0))
    throw std::domain_error("LogScaleRwmUpdate: current value must be positive");
  Eigen::VectorXd y(1);
  y[0] = v[0] * std::exp(sigma_ * rng.normal());
  tel.proposals += 1;
  double log_alpha;
  if (!target.site_in_domain(site, y)) {
    log_alpha = -kInf;
  } else {
    double hy = target.site_logpdf(site, x, y, nullptr, &tel);
    double hx = target.site_logpdf(site, x, v, nullptr, &tel);
    log_alpha = hy - hx + std::log(y[0]) - std::log(v[0]);
  }
  if (std::log(rng.uniform()) < log_alpha) {
    target.set_site_value(site, x, y);
    tel.accepts += 1;
  }
}

RepeatedUpdate::RepeatedUpdate(std::shared_ptr<ConditionalUpdate> inner, int k)
    : inner_(std::move(inner)), k_(k) {
  if (!inner_) throw std::invalid_argument("RepeatedUpdate: null inner update");
  if (k_ < 1) throw std::invalid_argument("RepeatedUpdate: k must be >= 1");
}

void RepeatedUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                           Telemetry& tel, VisitCache* cache) const {
  for (int rep = 0; rep < k_; ++rep) inner_->apply(target, site, x, rng, tel, cache);
}

std::string RepeatedUpdate::name() const {
  return inner_->name() + ":k=" + std::to_string(k_);
}

void LazyUpdate::apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                       Telemetry& tel, VisitCache* cache) const {
  if (rng.bernoulli(0.5)) inner_->apply(target, site, x, rng, tel, cache);
}

}  // namespace cwmc

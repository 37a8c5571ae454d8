#include "cwmc/normal_gamma.hpp"

#include <cmath>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

NormalGammaPosterior normal_gamma_update(const NormalGammaPrior& prior, long n, double sum,
                                         double sumsq) {
  if (n < 0) throw std::invalid_argument("normal_gamma_update: negative count");
  if (prior.a <= 0.0 || prior.b <= 0.0 || prior.kappa0 <= 0.0)
    throw std::invalid_argument("normal_gamma_update: prior parameters must be positive");
  if (n == 0) return {prior.a, prior.b, prior.kappa0, prior.m0};
  double nd = static_cast<double>(n);
  double mean = sum / nd;
  double ss = std::max(0.0, sumsq - nd * mean * mean);
  double kappa_n = prior.kappa0 + nd;
  double diff = mean - prior.m0;
  return {prior.a + 0.5 * nd,
          prior.b + 0.5 * ss + prior.kappa0 * nd * diff * diff / (2.0 * kappa_n), kappa_n,
          (prior.kappa0 * prior.m0 + sum) / kappa_n};
}

NormalGammaPosterior normal_gamma_update(const NormalGammaPrior& prior,
                                         const Eigen::VectorXd& obs) {
  return normal_gamma_update(prior, obs.size(), obs.sum(), obs.squaredNorm());
}

void normal_gamma_draw(const NormalGammaPosterior& post, Rng& rng, double* mu, double* tau) {
  double t = rng.gamma(post.a, post.b);
  *tau = t;
  *mu = rng.normal(post.m, 1.0 / std::sqrt(post.kappa * t));
}

double normal_gamma_logpdf(const NormalGammaPosterior& post, double mu, double tau) {
  if (!(tau > 0.0)) return -kInf;
  double lg = post.a * std::log(post.b) - lgamma_fn(post.a) + (post.a - 1.0) * std::log(tau) -
              post.b * tau;
  double ln = 0.5 * std::log(post.kappa * tau / (2.0 * M_PI)) -
              0.5 * post.kappa * tau * (mu - post.m) * (mu - post.m);
  return lg + ln;
}

}  // namespace cwmc

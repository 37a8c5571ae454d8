#pragma once

#include <Eigen/Dense>

#include "cwmc/rng.hpp"

namespace cwmc {

// Conjugate prior for the mean/precision pair of a normal population:
// tau ~ Gamma(a, b) (rate parameterization), mu | tau ~ N(m0, 1/(kappa0 tau)).
struct NormalGammaPrior {
  double a = 1.0;
  double b = 1.0;
  double kappa0 = 1e-3;
  double m0 = 0.0;
};

struct NormalGammaPosterior {
  double a;
  double b;
  double kappa;
  double m;
};

// Posterior parameters from the sufficient statistics of n observations.
// n = 0 returns the prior unchanged.
NormalGammaPosterior normal_gamma_update(const NormalGammaPrior& prior, long n, double sum,
                                         double sumsq);
NormalGammaPosterior normal_gamma_update(const NormalGammaPrior& prior,
                                         const Eigen::VectorXd& obs);

// Draws (mu, tau) from the posterior: tau ~ Gamma(a, b), mu ~ N(m, 1/(kappa tau)).
void normal_gamma_draw(const NormalGammaPosterior& post, Rng& rng, double* mu, double* tau);

// Joint log density of (mu, tau) under the posterior, tau > 0.
double normal_gamma_logpdf(const NormalGammaPosterior& post, double mu, double tau);

}  // namespace cwmc

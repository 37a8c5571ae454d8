#pragma once

#include <Eigen/Dense>
#include <functional>

namespace cwmc {

// adaptive Simpson with absolute tolerance
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 50);

// nodes/weights for weight function exp(-t^2) on the real line
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

GaussHermite gauss_hermite(int n);
const GaussHermite& gauss_hermite_128();

// log of \int exp(logf(x)) dx using Gauss-Hermite after the substitution
// x = center + sqrt(2)*scale*t
double log_integral_gauss_hermite(const std::function<double(double)>& logf, double center,
                                  double scale, const GaussHermite& gh);

}  // namespace cwmc

#include <algorithm>
#include <cmath>
#include <vector>

#include "cwmc/ars.hpp"
#include "cwmc/mathutil.hpp"
#include "cwmc/quadrature.hpp"
#include "doctest.h"

using namespace cwmc;

namespace {

// two-sided Kolmogorov-Smirnov statistic against a cdf
double ks_stat(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double F = cdf(xs[i]);
    d = std::max(d, std::abs(F - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - F));
  }
  return d;
}

// asymptotic two-sided critical value at the 1% level
double ks_crit_1pct(int n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

}  // namespace

TEST_CASE("ars draws standard normals on an unbounded domain") {
  ArsEnvelope env([](double v, double* dh) { *dh = -v; return -0.5 * v * v; }, -kInf, kInf,
                  {-1.0, 1.0});
  Rng rng(71);
  const int n = 3000;
  std::vector<double> xs(n);
  for (double& v : xs) v = env.sample(rng);
  CHECK(ks_stat(xs, [](double x) { return normal_cdf(x); }) < ks_crit_1pct(n));
  CHECK(env.hull_size() >= 2);
}

TEST_CASE("ars respects a truncated domain") {
  ArsEnvelope env([](double v, double* dh) { *dh = -v; return -0.5 * v * v; }, 0.0, 2.0,
                  {0.5, 1.5});
  Rng rng(72);
  const int n = 3000;
  const double f0 = normal_cdf(0.0), mass = normal_cdf(2.0) - f0;
  std::vector<double> xs(n);
  for (double& v : xs) {
    v = env.sample(rng);
    CHECK(v > 0.0);
    CHECK(v < 2.0);
  }
  CHECK(ks_stat(xs, [&](double x) { return (normal_cdf(x) - f0) / mass; }) < ks_crit_1pct(n));
}

TEST_CASE("ars with a linear log density is an exponential sampler") {
  ArsEnvelope env([](double v, double* dh) { *dh = -3.0; return -3.0 * v; }, 0.0, kInf,
                  {0.5, 1.0});
  Rng rng(73);
  const int n = 3000;
  std::vector<double> xs(n);
  for (double& v : xs) v = env.sample(rng);
  CHECK(ks_stat(xs, [](double x) { return 1.0 - std::exp(-3.0 * x); }) < ks_crit_1pct(n));
}

TEST_CASE("ars quartic moments match quadrature") {
  auto dens = [](double v) { return std::exp(-v * v * v * v); };
  double i0 = adaptive_simpson(dens, -4.0, 4.0, 1e-12);
  double i2 = adaptive_simpson([&](double v) { return v * v * dens(v); }, -4.0, 4.0, 1e-12);
  double truth = i2 / i0;

  ArsEnvelope env(
      [](double v, double* dh) {
        *dh = -4.0 * v * v * v;
        return -v * v * v * v;
      },
      -kInf, kInf, {-0.7, 0.7});
  Rng rng(74);
  const int n = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = env.sample(rng);
    double q = v * v;
    s1 += q;
    s2 += q * q;
  }
  double mean = s1 / n;
  double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - truth) < 4.0 * se);
}

TEST_CASE("ars tail bracketing starts from a one-sided hull") {
  // single init point right of the mode: both tails must be found by doubling
  ArsEnvelope env([](double v, double* dh) { *dh = -(v - 5.0); return -0.5 * sqr(v - 5.0); },
                  -kInf, kInf, {9.0});
  CHECK(env.hull_size() >= 2);
  Rng rng(75);
  double s = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) s += env.sample(rng);
  CHECK(std::abs(s / n - 5.0) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("ars rejects a log-convex density") {
  CHECK_THROWS_AS(
      ArsEnvelope([](double v, double* dh) { *dh = v; return 0.5 * v * v; }, -kInf, kInf,
                  {-1.0, 1.0}),
      std::runtime_error);
}

TEST_CASE("ars constructor validates its inputs") {
  auto h = [](double v, double* dh) { *dh = -v; return -0.5 * v * v; };
  CHECK_THROWS_AS(ArsEnvelope(h, 1.0, 1.0, {0.5}), std::invalid_argument);    // empty domain
  CHECK_THROWS_AS(ArsEnvelope(h, 0.0, 1.0, {}), std::invalid_argument);       // no init points
  CHECK_THROWS_AS(ArsEnvelope(h, 0.0, 1.0, {2.0}), std::invalid_argument);    // outside domain
}

TEST_CASE("ars hull growth is capped") {
  ArsEnvelope env([](double v, double* dh) { *dh = -v; return -0.5 * v * v; }, -kInf, kInf,
                  {-1.0, 1.0}, 4);
  Rng rng(76);
  for (int i = 0; i < 200; ++i) env.sample(rng);
  CHECK(env.hull_size() <= 4);
}

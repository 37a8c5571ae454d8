#include <cmath>
#include <vector>

#include "cwmc/diffusion.hpp"
#include "cwmc/mathutil.hpp"
#include "cwmc/quadrature.hpp"
#include "doctest.h"

using namespace cwmc;

namespace {

DriftFamily zero_drift() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }, "zero"};
}

// log weight of a three-point segment written out by hand
double hand_log_weight(double y0, double y1, double delta, double theta) {
  double t0 = sqr(theta * std::sin(y0)) - theta * std::cos(y0);
  double t1 = sqr(theta * std::sin(y1)) - theta * std::cos(y1);
  return -0.5 * (t0 + t1) * delta;
}

}  // namespace

TEST_CASE("drift families expose the advertised functions") {
  DriftFamily s = sine_drift(), o = ou_drift();
  CHECK(s.name == "sine");
  CHECK(o.name == "ou");
  CHECK(s.h(0.3) == doctest::Approx(std::sin(0.3)));
  CHECK(s.dh(0.3) == doctest::Approx(std::cos(0.3)));
  CHECK(o.h(1.7) == doctest::Approx(-1.7));
  CHECK(o.dh(-2.0) == doctest::Approx(-1.0));
}

TEST_CASE("euler-maruyama simulation: shape, determinism, dynamics") {
  Rng rng(501);
  DiffusionData d = simulate_diffusion_em(sine_drift(), 1.0, 0.4, 2.0, 9, 50, rng);
  CHECK(d.n_obs() == 9);
  CHECK(d.n_segments() == 8);
  CHECK(d.T == 2.0);
  CHECK(d.seg_len() == doctest::Approx(0.25));
  CHECK(d.obs[0] == 0.4);

  Rng ra(502), rb(502);
  DiffusionData a = simulate_diffusion_em(ou_drift(), 0.7, 0.0, 1.0, 5, 20, ra);
  DiffusionData b = simulate_diffusion_em(ou_drift(), 0.7, 0.0, 1.0, 5, 20, rb);
  CHECK((a.obs - b.obs).lpNorm<Eigen::Infinity>() == 0.0);

  // strong mean reversion pulls the endpoint to the stationary law N(0, 1/(2 theta))
  Rng rc(503);
  double sum = 0.0, sumsq = 0.0;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    DiffusionData p = simulate_diffusion_em(ou_drift(), 4.0, 3.0, 8.0, 20, 200, rc);
    sum += p.obs[19];
    sumsq += sqr(p.obs[19]);
  }
  CHECK(std::abs(sum / reps) < 0.1);
  CHECK(sumsq / reps == doctest::Approx(0.125).epsilon(0.25));

  CHECK_THROWS_AS(simulate_diffusion_em(ou_drift(), 1.0, 0.0, 1.0, 1, 10, rc),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate_diffusion_em(ou_drift(), 1.0, 0.0, 1.0, 5, 0, rc),
                  std::invalid_argument);
}

TEST_CASE("brownian bridge hits the exact grid law") {
  Rng rng(504);
  const int n = 200000;

  // midpoint of a pinned unit-interval bridge
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd y = sample_brownian_bridge(0.0, 0.0, 1.0, 2, rng);
    CHECK(y.size() == 3);
    s1 += y[1];
    s2 += sqr(y[1]);
  }
  double mean = s1 / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(var - 0.25) < 0.004);

  // sloped endpoints: mean line, pointwise variance, cross covariance
  double m2 = 0.0, v2 = 0.0, c13 = 0.0, m1 = 0.0, m3 = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd y = sample_brownian_bridge(1.0, -2.0, 0.5, 4, rng);
    m1 += y[1];
    m2 += y[2];
    m3 += y[3];
    v2 += sqr(y[2]);
    c13 += y[1] * y[3];
  }
  m1 /= n;
  m2 /= n;
  m3 /= n;
  CHECK(std::abs(m2 - (-0.5)) < 0.005);
  CHECK(std::abs(v2 / n - m2 * m2 - 0.125) < 0.004);
  // cov(Y_s, Y_t) = s (L - t) / L at s = 0.125, t = 0.375, L = 0.5
  CHECK(std::abs(c13 / n - m1 * m3 - 0.03125) < 0.002);

  // variance scales linearly with the interval length
  double v_small = 0.0, mm = 0.0;
  for (int i = 0; i < 100000; ++i) {
    Eigen::VectorXd y = sample_brownian_bridge(0.0, 0.0, 0.01, 2, rng);
    mm += y[1];
    v_small += sqr(y[1]);
  }
  CHECK(std::abs(v_small / 100000 - sqr(mm / 100000) - 0.0025) < 6e-5);

  Rng ra(505), rb(505);
  Eigen::VectorXd ya = sample_brownian_bridge(0.3, 0.9, 1.0, 8, ra);
  Eigen::VectorXd yb = sample_brownian_bridge(0.3, 0.9, 1.0, 8, rb);
  CHECK((ya - yb).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(ya[0] == 0.3);
  CHECK(ya[8] == 0.9);

  CHECK_THROWS_AS(sample_brownian_bridge(0.0, 0.0, 1.0, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_brownian_bridge(0.0, 0.0, -1.0, 2, rng), std::invalid_argument);
}

TEST_CASE("girsanov log weight: closed forms and the left-endpoint rule") {
  // constant path at the origin under b = -theta x: integrand is theta
  Eigen::VectorXd flat = Eigen::VectorXd::Zero(9);
  CHECK(girsanov_log_weight(flat, 1.0 / 8.0, ou_drift(), 1.0) == doctest::Approx(-0.5));
  CHECK(girsanov_log_weight(flat, 1.0 / 8.0, ou_drift(), 2.0) == doctest::Approx(-1.0));

  Rng rng(506);
  Eigen::VectorXd ragged(5);
  for (int i = 0; i < 5; ++i) ragged[i] = rng.normal();
  CHECK(girsanov_log_weight(ragged, 0.25, sine_drift(), 0.0) == 0.0);

  Eigen::Vector3d seg(0.1, 0.4, 0.2);
  double got = girsanov_log_weight(seg, 0.3, sine_drift(), 0.7);
  CHECK(got == doctest::Approx(hand_log_weight(0.1, 0.4, 0.3, 0.7)).epsilon(1e-14));
  // the rule never reads the right endpoint
  Eigen::Vector3d seg2(0.1, 0.4, 99.0);
  CHECK(girsanov_log_weight(seg2, 0.3, sine_drift(), 0.7) == got);
}

TEST_CASE("girsanov discretization error halves with the step") {
  double theta = 0.8;
  DriftFamily drift = sine_drift();
  auto integrand = [&](double t) {
    double y = std::sin(2.0 * t);
    return sqr(theta * drift.h(y)) - theta * drift.dh(y);
  };
  double exact = -0.5 * adaptive_simpson(integrand, 0.0, 1.0, 1e-13);
  std::vector<double> err;
  for (int R : {64, 128, 256}) {
    Eigen::VectorXd seg(R + 1);
    for (int k = 0; k <= R; ++k) seg[k] = std::sin(2.0 * k / R);
    err.push_back(girsanov_log_weight(seg, 1.0 / R, drift, theta) - exact);
  }
  CHECK(err[0] / err[1] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(err[1] / err[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("theta coefficients reproduce the summed log weights") {
  Eigen::MatrixXd path(2, 3);
  path << 0.1, 0.4, 0.2,
          -0.3, 0.0, 0.25;
  double delta = 0.3;
  ThetaCoeffs c = girsanov_theta_coeffs(path, delta, sine_drift());
  double sa = 0.0, sb = 0.0;
  for (int s = 0; s < 2; ++s)
    for (int k = 0; k < 2; ++k) {
      sa += sqr(std::sin(path(s, k))) * delta;
      sb += std::cos(path(s, k)) * delta;
    }
  CHECK(c.Sa == doctest::Approx(sa).epsilon(1e-14));
  CHECK(c.Sb == doctest::Approx(sb).epsilon(1e-14));
  for (double theta : {0.0, 0.6, 1.7}) {
    double direct = girsanov_log_weight(path.row(0).transpose(), delta, sine_drift(), theta) +
                    girsanov_log_weight(path.row(1).transpose(), delta, sine_drift(), theta);
    CHECK(-0.5 * c.Sa * sqr(theta) + 0.5 * c.Sb * theta ==
          doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("truncated normal draws match quadrature moments") {
  Rng guard(1);
  CHECK_THROWS_AS(draw_truncated_normal(0.0, 1.0, 2.0, 2.0, guard), std::invalid_argument);
  CHECK_THROWS_AS(draw_truncated_normal(0.0, -1.0, 0.0, 1.0, guard), std::invalid_argument);

  // a wide interval never triggers the truncation machinery: identical stream
  Rng r1(507), r2(507);
  for (int i = 0; i < 100; ++i) {
    double a = draw_truncated_normal(1.2, 0.7, -100.0, 100.0, r1);
    double b = 1.2 + 0.7 * r2.normal();
    CHECK(a == b);
  }

  auto dens = [](double x) { return std::exp(-0.5 * x * x); };
  double z = adaptive_simpson(dens, 2.5, 3.5, 1e-12);
  double m = adaptive_simpson([&](double x) { return x * dens(x); }, 2.5, 3.5, 1e-12) / z;
  double v = adaptive_simpson([&](double x) { return x * x * dens(x); }, 2.5, 3.5, 1e-12) / z -
             m * m;
  Rng rng(508);
  const int n = 20000;
  double s1 = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = draw_truncated_normal(0.0, 1.0, 2.5, 3.5, rng);
    CHECK(x >= 2.5);
    CHECK(x <= 3.5);
    s1 += x;
  }
  CHECK(std::abs(s1 / n - m) < 5.0 * std::sqrt(v / n));
}

TEST_CASE("lamperti transform rescales observations") {
  Eigen::Vector3d obs(0.5, 2.0, -1.0);
  Eigen::VectorXd same = lamperti_transform(obs);
  CHECK((same - obs).lpNorm<Eigen::Infinity>() == 0.0);

  Eigen::VectorXd halved = lamperti_transform(obs, [](double) { return 2.0; });
  CHECK(halved[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(halved[2] == doctest::Approx(-0.5).epsilon(1e-10));

  // sigma(u) = u from base point 1 gives the log transform
  Eigen::Vector3d pos(0.5, 1.0, 4.0);
  Eigen::VectorXd logged = lamperti_transform(pos, [](double u) { return u; }, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(logged[i] == doctest::Approx(std::log(pos[i])).epsilon(1e-9));

  CHECK_THROWS_AS(lamperti_transform(obs, [](double u) { return u; }, 1.0), std::domain_error);
}

TEST_CASE("da sampler: construction guards and endpoint immutability") {
  DiffusionData data;
  data.T = 1.0;
  data.obs = Eigen::Vector3d(0.0, 0.5, -0.3);
  CHECK_THROWS_AS(DiffusionDaSampler(data, sine_drift(), 0, 0.0, 1.0, 0.0, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiffusionDaSampler(data, sine_drift(), 2, 0.0, 1.0, 2.0, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiffusionDaSampler(data, sine_drift(), 2, 0.0, -1.0, 0.0, 2.0),
                  std::invalid_argument);
  DiffusionData tiny;
  tiny.obs = Eigen::VectorXd::Constant(1, 0.3);
  CHECK_THROWS_AS(DiffusionDaSampler(tiny, sine_drift(), 2, 0.0, 1.0, 0.0, 2.0),
                  std::invalid_argument);

  DiffusionDaSampler da(data, sine_drift(), 4, 0.5, 1.0, 0.0, 2.0);
  CHECK_THROWS_AS(da.set_theta(2.5), std::invalid_argument);
  da.set_theta(1.25);
  CHECK(da.theta() == 1.25);
  Rng rng(509);
  da.init_path(rng);
  for (int i = 0; i < 500; ++i) da.sweep(rng);
  for (int s = 0; s < 2; ++s) {
    CHECK(da.path()(s, 0) == data.obs[s]);
    CHECK(da.path()(s, 4) == data.obs[s + 1]);
    CHECK(da.theta() >= 0.0);
    CHECK(da.theta() <= 2.0);
  }
}

TEST_CASE("theta step with a null drift samples the truncated prior") {
  DiffusionData data;
  data.T = 1.0;
  data.obs = Eigen::Vector3d(0.0, 0.5, -0.3);
  DiffusionDaSampler da(data, zero_drift(), 2, 0.4, 0.09, 0.0, 1.0);
  Rng rda(510), roracle(510);
  for (int i = 0; i < 200; ++i) {
    da.theta_step(rda);
    double want = draw_truncated_normal(0.4, 0.3, 0.0, 1.0, roracle);
    CHECK(da.theta() == doctest::Approx(want).epsilon(1e-9));
  }

  // an infinite prior variance with no drift information falls back to uniform
  DiffusionDaSampler flat(data, zero_drift(), 2, 0.0,
                          std::numeric_limits<double>::infinity(), 0.25, 0.75);
  Rng rf(511);
  double lo = 1.0, hi = 0.0, acc = 0.0;
  for (int i = 0; i < 4000; ++i) {
    flat.theta_step(rf);
    lo = std::min(lo, flat.theta());
    hi = std::max(hi, flat.theta());
    acc += flat.theta();
  }
  CHECK(lo >= 0.25);
  CHECK(hi <= 0.75);
  CHECK(std::abs(acc / 4000 - 0.5) < 0.01);
}

TEST_CASE("theta conditional matches quadrature of the path likelihood") {
  Rng rng(512);
  DiffusionData data = simulate_diffusion_em(sine_drift(), 1.0, 0.2, 1.0, 3, 100, rng);
  DiffusionDaSampler da(data, sine_drift(), 8, 0.3, 2.0, 0.0, 2.0);
  da.init_path(rng);

  // quadrature over theta of exp(sum log G) times the prior, on the support
  Eigen::MatrixXd path = da.path();
  double delta = data.seg_len() / 8;
  auto loglik = [&](double th) {
    double lw = 0.0;
    for (int s = 0; s < 2; ++s)
      lw += girsanov_log_weight(path.row(s).transpose(), delta, sine_drift(), th);
    return lw + normal_logpdf(th, 0.3, std::sqrt(2.0));
  };
  double shift = loglik(0.7);
  auto dens = [&](double th) { return std::exp(loglik(th) - shift); };
  double z = adaptive_simpson(dens, 0.0, 2.0, 1e-12);
  double q_mean = adaptive_simpson([&](double t) { return t * dens(t); }, 0.0, 2.0, 1e-12) / z;
  double q_var =
      adaptive_simpson([&](double t) { return t * t * dens(t); }, 0.0, 2.0, 1e-12) / z -
      q_mean * q_mean;

  // closed form: truncated gaussian from the quadratic coefficients
  ThetaCoeffs c = girsanov_theta_coeffs(path, delta, sine_drift());
  double lambda = c.Sa + 0.5;
  double mean = (0.5 * c.Sb + 0.15) / lambda, sd = 1.0 / std::sqrt(lambda);
  double a = (0.0 - mean) / sd, b = (2.0 - mean) / sd;
  double za = std::exp(normal_logpdf(a, 0.0, 1.0));
  double zb = std::exp(normal_logpdf(b, 0.0, 1.0));
  double mass = normal_cdf(b) - normal_cdf(a);
  CHECK(mean + sd * (za - zb) / mass == doctest::Approx(q_mean).epsilon(1e-6));

  // and the actual draws agree with both
  Rng rd(513);
  const int n = 30000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    da.theta_step(rd);
    s1 += da.theta();
    s2 += sqr(da.theta());
  }
  CHECK(std::abs(s1 / n - q_mean) < 5.0 * std::sqrt(q_var / n));
  CHECK(s2 / n - sqr(s1 / n) == doctest::Approx(q_var).epsilon(0.05));
  // the path is the theta step's conditioning state, never its output
  CHECK((da.path() - path).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("bridge update is reversible and keeps its target law") {
  // single segment, one interior point: everything is one-dimensional
  DiffusionData data;
  data.T = 0.5;
  data.obs = Eigen::Vector2d(0.3, -0.2);
  double theta = 1.3, half = 0.25;  // delta between grid points
  double q_mean = 0.3 + 0.5 * (-0.2 - 0.3), q_var = half / 2.0;
  auto g_of = [&](double y) {
    Eigen::Vector3d seg(0.3, y, -0.2);
    return std::exp(girsanov_log_weight(seg, half, sine_drift(), theta));
  };
  auto q_of = [&](double y) { return std::exp(normal_logpdf(y, q_mean, std::sqrt(q_var))); };
  auto target = [&](double y) { return q_of(y) * g_of(y); };

  // detailed balance of the off-diagonal kernel density on a grid of pairs
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      double y = q_mean + (i - 9.5) * 0.3, yp = q_mean + (j - 9.5) * 0.3;
      double fwd = target(y) * q_of(yp) * std::min(1.0, g_of(yp) / g_of(y));
      double bwd = target(yp) * q_of(y) * std::min(1.0, g_of(y) / g_of(yp));
      CHECK(fwd == doctest::Approx(bwd).epsilon(1e-8));
    }

  // empirical law of the interior point after many updates
  double z = adaptive_simpson(target, q_mean - 8.0, q_mean + 8.0, 1e-12);
  double want_mean =
      adaptive_simpson([&](double y) { return y * target(y); }, q_mean - 8.0, q_mean + 8.0,
                       1e-12) /
      z;
  double want_var =
      adaptive_simpson([&](double y) { return y * y * target(y); }, q_mean - 8.0, q_mean + 8.0,
                       1e-12) /
          z -
      want_mean * want_mean;
  DiffusionDaSampler da(data, sine_drift(), 2, 1.3, 1.0, 0.0, 2.0);
  da.set_theta(theta);
  Rng rng(514);
  da.init_path(rng);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    da.bridges_step(rng);
    double y = da.path()(0, 1);
    s1 += y;
    s2 += y * y;
  }
  CHECK(da.bridge_proposals() == n);
  CHECK(da.bridge_acceptance() > 0.5);
  double se = std::sqrt(want_var * 3.0 / n);
  CHECK(std::abs(s1 / n - want_mean) < 5.0 * se);
  CHECK(s2 / n - sqr(s1 / n) == doctest::Approx(want_var).epsilon(0.05));
}

TEST_CASE("full da sweep leaves the augmented posterior invariant") {
  DiffusionData data;
  data.T = 1.0;
  data.obs = Eigen::Vector3d(0.0, 0.5, -0.3);
  double delta = 0.25;  // two segments, R = 2
  double prior_mean = 0.5, prior_var = 1.0;

  // theta marginal by nested quadrature: integrate the bridge point per
  // segment, then theta over the support
  auto seg_integral = [&](int s, double th) {
    double a = data.obs[s], b = data.obs[s + 1];
    double mid = 0.5 * (a + b), sd = std::sqrt(delta / 2.0);
    auto f = [&](double y) {
      Eigen::Vector3d seg(a, y, b);
      return std::exp(normal_logpdf(y, mid, sd) +
                      girsanov_log_weight(seg, delta, sine_drift(), th));
    };
    return adaptive_simpson(f, mid - 10.0 * sd, mid + 10.0 * sd, 1e-11);
  };
  auto m_of = [&](double th) {
    return std::exp(normal_logpdf(th, prior_mean, std::sqrt(prior_var))) * seg_integral(0, th) *
           seg_integral(1, th);
  };
  double z = adaptive_simpson(m_of, 0.0, 2.0, 1e-11);
  double want_mean =
      adaptive_simpson([&](double t) { return t * m_of(t); }, 0.0, 2.0, 1e-11) / z;
  double want_var =
      adaptive_simpson([&](double t) { return t * t * m_of(t); }, 0.0, 2.0, 1e-11) / z -
      sqr(want_mean);

  DiffusionDaSampler da(data, sine_drift(), 2, prior_mean, prior_var, 0.0, 2.0);
  Rng rng(515);
  da.init_path(rng);
  for (int i = 0; i < 2000; ++i) da.sweep(rng);
  const int n = 300000, batches = 100;
  std::vector<double> batch_mean(batches, 0.0);
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    da.sweep(rng);
    s1 += da.theta();
    s2 += sqr(da.theta());
    batch_mean[static_cast<size_t>(i * batches / n)] += da.theta();
  }
  double mean = s1 / n, var = s2 / n - mean * mean;
  double bm = 0.0, bv = 0.0;
  for (double& m : batch_mean) {
    m /= (n / batches);
    bm += m;
  }
  bm /= batches;
  for (double m : batch_mean) bv += sqr(m - bm);
  double mcse = std::sqrt(bv / (batches - 1) / batches);
  CHECK(std::abs(mean - want_mean) < 5.0 * mcse);
  CHECK(var == doctest::Approx(want_var).epsilon(0.08));
}

TEST_CASE("bridge acceptance is stable as observations densify") {
  std::vector<double> rates;
  for (int n_obs : {5, 17}) {
    Rng rng(516);
    DiffusionData data = simulate_diffusion_em(sine_drift(), 1.0, 0.0, 2.0, n_obs, 100, rng);
    CHECK(data.obs.cwiseAbs().maxCoeff() <= 3.0);
    DiffusionDaSampler da(data, sine_drift(), 16, 1.0, 1.0, 0.0, 2.0);
    da.set_theta(1.0);
    Rng rs(517);
    da.init_path(rs);
    for (int i = 0; i < 4000; ++i) da.bridges_step(rs);
    rates.push_back(da.bridge_acceptance());
  }
  CHECK(rates[0] > 0.5);
  CHECK(rates[1] > 0.5);
  CHECK(std::abs(rates[0] - rates[1]) < 0.08);
}

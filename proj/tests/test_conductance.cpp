#include <cmath>
#include <map>

#include "cwmc/conductance.hpp"
#include "cwmc/discrete.hpp"
#include "doctest.h"

using namespace cwmc;

namespace {

// symmetric two-state flip kernel: eigenvalues {1, 0.4}, conductance 0.3
DiscreteKernel flip_kernel() {
  DiscreteTarget t = make_target({2}, Eigen::Vector2d(0.5, 0.5));
  Eigen::MatrixXd P(2, 2);
  P << 0.7, 0.3, 0.3, 0.7;
  return make_kernel(t, P);
}

// asymmetric two-state kernel, pi = (1/3, 2/3)
DiscreteKernel skew_kernel() {
  DiscreteTarget t = make_target({2}, Eigen::Vector2d(1.0 / 3, 2.0 / 3));
  Eigen::MatrixXd P(2, 2);
  P << 0.5, 0.5, 0.25, 0.75;
  return make_kernel(t, P);
}

// pi(x1, x2) proportional to w[x1] * f(parity(x1))[x2]; the conditional law of
// x2 given x1 depends on x1 only through its parity
DiscreteTarget parity_target() {
  Eigen::Vector4d w(0.1, 0.2, 0.3, 0.4);
  Eigen::Vector2d f0(0.3, 0.7), f1(0.6, 0.4);
  Eigen::VectorXd pi(8);
  for (int x1 = 0; x1 < 4; ++x1)
    for (int x2 = 0; x2 < 2; ++x2) pi[x1 + 4 * x2] = w[x1] * ((x1 % 2 == 0) ? f0 : f1)[x2];
  return make_target({4, 2}, pi);
}

}  // namespace

TEST_CASE("flux and set mass by hand") {
  DiscreteKernel k = skew_kernel();
  CHECK(set_mass(k.target, 0b01) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(flux(k, 0b01) == doctest::Approx(1.0 / 6).epsilon(1e-15));
  CHECK(flux(k, 0b10) == doctest::Approx(1.0 / 6).epsilon(1e-15));  // reversibility
  CHECK(flux(k, 0b11) == 0.0);
}

TEST_CASE("restricted conductance of the flip kernel") {
  DiscreteKernel k = flip_kernel();
  SConductanceResult r0 = s_conductance(k, 0.0);
  CHECK(r0.any_admissible);
  CHECK(r0.phi == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(r0.phi_alt == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(r0.argmin == 0b01);  // tie with {1} broken toward the set holding state 0

  SConductanceResult r = s_conductance(k, 0.25);
  CHECK(r.phi == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(r.phi_alt == doctest::Approx(0.6).epsilon(1e-14));

  // eigenvalue gap and the two-sided conductance sandwich
  CHECK(k.spectral_gap == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(k.spectral_gap / 2 <= r0.phi + 1e-14);
  CHECK(r0.phi <= std::sqrt(2.0 * k.spectral_gap) + 1e-14);
}

TEST_CASE("restricted conductance of the skew kernel") {
  DiscreteKernel k = skew_kernel();
  SConductanceResult r0 = s_conductance(k, 0.0);
  CHECK(r0.phi == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r0.argmin == 0b01);  // the only admissible set
  SConductanceResult r = s_conductance(k, 0.25);
  CHECK(r.phi == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.phi_alt == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(k.spectral_gap == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("no admissible set leaves the result infinite") {
  DiscreteTarget t = make_target({2}, Eigen::Vector2d(0.4, 0.6));
  DiscreteKernel k = make_kernel(t, Eigen::MatrixXd::Identity(2, 2));
  SConductanceResult r = s_conductance(k, 0.45);
  CHECK(!r.any_admissible);
  CHECK(std::isinf(r.phi));
  CHECK(std::isinf(r.phi_alt));
}

TEST_CASE("s_conductance rejects s outside [0, 1/2)") {
  DiscreteKernel k = flip_kernel();
  CHECK_THROWS(s_conductance(k, 0.5));
  CHECK_THROWS(s_conductance(k, -0.01));
}

TEST_CASE("profile is monotone in s and phi never exceeds phi_alt") {
  Rng rng(7);
  std::vector<double> s_grid{0.0, 0.05, 0.1, 0.2, 0.3, 0.45};
  for (int rep = 0; rep < 10; ++rep) {
    DiscreteTarget t = random_target({3, 3}, rng);
    RandomScanDiscrete rs = gibbs_sampler(t);
    std::vector<SConductanceResult> prof = s_conductance_profile(rs.kernel, s_grid);
    REQUIRE(prof.size() == s_grid.size());
    CHECK(prof[0].phi == doctest::Approx(prof[0].phi_alt).epsilon(1e-14));
    for (size_t j = 0; j < prof.size(); ++j) {
      CHECK(prof[j].phi <= prof[j].phi_alt + 1e-14);
      if (j > 0) {
        CHECK(prof[j].phi >= prof[j - 1].phi - 1e-14);
        CHECK(prof[j].phi_alt >= prof[j - 1].phi_alt - 1e-14);
      }
    }
    // the profile agrees with one-at-a-time evaluation
    SConductanceResult lone = s_conductance(rs.kernel, 0.2);
    CHECK(prof[3].phi == doctest::Approx(lone.phi).epsilon(1e-14));
    CHECK(prof[3].argmin == lone.argmin);
  }
}

TEST_CASE("subset enumeration refuses beyond 24 states") {
  Rng rng(9);
  DiscreteTarget t = random_target({5, 5}, rng);
  RandomScanDiscrete rs = gibbs_sampler(t);
  CHECK_THROWS(s_conductance(rs.kernel, 0.0));
}

TEST_CASE("normalized kappa of small conditional kernels") {
  Eigen::Vector3d p(0.5, 0.3, 0.2);
  CHECK(normalized_kappa(exact_conditional_matrix(p), p) == doctest::Approx(1.0).epsilon(1e-13));

  Eigen::Vector3d q(1.0 / 3, 1.0 / 3, 1.0 / 3);
  double kappa_imh = normalized_kappa(imh_conditional_matrix(p, q), p);
  CHECK(kappa_imh == doctest::Approx(2.0 / 3).epsilon(1e-13));  // equals 1/M here, M = 1.5

  Eigen::MatrixXd mixed = mix_with_identity(exact_conditional_matrix(p), 0.25);
  CHECK(normalized_kappa(mixed, p) == doctest::Approx(0.25).epsilon(1e-13));

  Eigen::Vector2d point(1.0, 0.0);
  CHECK(std::isinf(normalized_kappa(Eigen::MatrixXd::Identity(2, 2), point)));
}

TEST_CASE("conditional conductance and its restriction to a marked set") {
  Eigen::VectorXd pi(4);
  pi << 0.49, 0.01, 0.25, 0.25;
  DiscreteTarget t = make_target({2, 2}, pi);
  // coordinate 0 proposal matches the x2 = 0 conditional exactly and is far
  // from the x2 = 1 conditional
  Eigen::Vector2d q(0.98, 0.02);
  RandomScanDiscrete rs = assemble_random_scan(t, {imh_builder(q), exact_builder()});

  CHECK(conditional_conductance(rs, 0) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(conditional_conductance(rs, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kappa_min(rs) == doctest::Approx(0.04).epsilon(1e-12));

  // marking only the x2 = 0 row hides the bad slice from coordinate 0
  std::vector<bool> K{true, true, false, false};
  CHECK(conditional_conductance(rs, 0, K) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(kappa_min(rs, K) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS(conditional_conductance(rs, 2));
  CHECK_THROWS(conditional_conductance(rs, 0, std::vector<bool>(4, false)));
}

TEST_CASE("gibbs conditionals have kappa one") {
  Rng rng(13);
  DiscreteTarget t = random_target({3, 4}, rng);
  RandomScanDiscrete rs = gibbs_sampler(t);
  CHECK(kappa_min(rs) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tv distance") {
  CHECK(tv_distance(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.7, 0.3)) ==
        doctest::Approx(0.2).epsilon(1e-15));
  CHECK(tv_distance(Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5)) == 0.0);
  CHECK_THROWS(tv_distance(Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)));
}

TEST_CASE("worst warm tv against the two-vertex polytope") {
  DiscreteKernel k = flip_kernel();
  // vertices of {mu <= 2 pi, sum mu = 1} are the two point masses, each at
  // distance 0.5 * 0.4^t after t steps
  for (int t = 0; t <= 4; ++t) {
    Eigen::MatrixXd Pt = matrix_power(k.P, t);
    CHECK(worst_warm_tv(k.target, Pt, 2.0) ==
          doctest::Approx(0.5 * std::pow(0.4, t)).epsilon(1e-12));
  }
  // an exactly warm start is already stationary
  CHECK(worst_warm_tv(k.target, k.P, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS(worst_warm_tv(k.target, k.P, 0.5));
}

TEST_CASE("exact mixing time of the flip kernel") {
  DiscreteKernel k = flip_kernel();
  MixingResult r = exact_mixing_time(k, 0.25, 2.0);
  CHECK(r.converged);
  CHECK(r.t == 1);
  CHECK(r.tv == doctest::Approx(0.2).epsilon(1e-12));

  MixingResult tight = exact_mixing_time(k, 0.01, 2.0);
  CHECK(tight.converged);
  CHECK(tight.t == 5);  // 0.5 * 0.4^5 = 0.00512

  MixingResult from0 = exact_mixing_time_from(k, Eigen::Vector2d(1.0, 0.0), 0.25);
  CHECK(from0.converged);
  CHECK(from0.t == 1);

  DiscreteKernel frozen = make_kernel(k.target, Eigen::MatrixXd::Identity(2, 2));
  MixingResult stuck = exact_mixing_time(frozen, 0.25, 2.0, 64);
  CHECK(!stuck.converged);
  CHECK(stuck.t == 64);
  CHECK(stuck.tv == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kernel discrepancy on shared targets") {
  DiscreteKernel k1 = flip_kernel();
  Eigen::MatrixXd P2m(2, 2);
  P2m << 0.6, 0.4, 0.4, 0.6;
  DiscreteKernel k2 = make_kernel(k1.target, P2m);
  CHECK(kernel_discrepancy(k1, k1, 2.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(kernel_discrepancy(k1, k2, 2.0) == doctest::Approx(0.1).epsilon(1e-13));
  CHECK(kernel_discrepancy(k1, k2, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("warm polytope enumeration refuses beyond 12 states") {
  Rng rng(21);
  DiscreteTarget t = random_target({13}, rng);
  DiscreteKernel k = make_kernel(t, exact_conditional_matrix(t.pi));
  CHECK_THROWS(worst_warm_tv(t, k.P, 2.0));
  CHECK_THROWS(kernel_discrepancy(k, k, 2.0));
}

TEST_CASE("two-block collapse through a sufficient statistic") {
  DiscreteTarget t = parity_target();
  CollapseResult c = collapse_two_block(t, {0, 1, 0, 1});
  CHECK(c.premise_holds);
  CHECK(c.premise_residual < 1e-14);
  REQUIRE(c.collapsed.dims == std::vector<int>{2, 2});
  // pushforward masses: parity classes weigh 0.4 and 0.6
  CHECK(c.collapsed.pi[0] == doctest::Approx(0.4 * 0.3).epsilon(1e-13));
  CHECK(c.collapsed.pi[1] == doctest::Approx(0.6 * 0.6).epsilon(1e-13));
  CHECK(c.collapsed.pi[2] == doctest::Approx(0.4 * 0.7).epsilon(1e-13));
  CHECK(c.collapsed.pi[3] == doctest::Approx(0.6 * 0.4).epsilon(1e-13));
  CHECK(c.collapsed_gibbs.kernel.stationarity_residual < 1e-13);

  // breaking one conditional within a class is detected with a witness pair
  Eigen::VectorXd bad = t.pi;
  bad[2] *= 1.5;  // state (x1 = 2, x2 = 0)
  bad /= bad.sum();
  CollapseResult broken = collapse_two_block(make_target({4, 2}, bad), {0, 1, 0, 1});
  CHECK(!broken.premise_holds);
  CHECK(broken.premise_residual > 1e-3);
  CHECK(((broken.witness_u == 0 && broken.witness_v == 2) ||
         (broken.witness_u == 2 && broken.witness_v == 0)));

  CHECK_THROWS(collapse_two_block(t, {0, 0, 0, 0}));       // map must split
  CHECK_THROWS(collapse_two_block(t, {0, 1, 0}));          // size mismatch
  Rng rng(1);
  CHECK_THROWS(collapse_two_block(random_target({2, 2, 2}, rng), {0, 1}));
}

TEST_CASE("scan_subsets reproduces direct flux and masses") {
  Rng rng(17);
  DiscreteTarget t = random_target({3, 2}, rng);
  RandomScanDiscrete rs = gibbs_sampler(t);
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(6, 6);
  std::vector<bool> mark{true, false, true, false, true, false};

  std::map<std::uint32_t, std::pair<double, double>> seen;  // mask -> (flux0, pi_a)
  int visits = 0;
  scan_subsets(t, {&rs.kernel.P, &I}, mark,
               [&](std::uint32_t mask, const double* fluxes, double pi_a, double pi_marked) {
                 ++visits;
                 seen[mask] = {fluxes[0], pi_a};
                 CHECK(fluxes[1] == doctest::Approx(0.0).epsilon(1e-15));  // identity has no flux
                 double direct_marked = 0.0;
                 for (int x = 0; x < 6; ++x)
                   if (((mask >> x) & 1u) && mark[x]) direct_marked += t.pi[x];
                 CHECK(pi_marked == doctest::Approx(direct_marked).epsilon(1e-13));
               });
  CHECK(visits == 63);
  CHECK(seen.size() == 63);
  for (const auto& [mask, vals] : seen) {
    CHECK(vals.first == doctest::Approx(flux(rs.kernel, mask)).epsilon(1e-12));
    CHECK(vals.second == doctest::Approx(set_mass(t, mask)).epsilon(1e-13));
  }
}

TEST_CASE("isolated atom family: zero conductance, positive restricted conductance") {
  // the atom at (2,2) cannot move under coordinate updates, so the plain
  // conductance vanishes for every n while the 0.05-restricted profile stays
  // at 1/4 once the atom mass drops below the floor
  for (int n = 1; n <= 6; ++n) {
    RandomScanDiscrete rs = isolated_atom_gibbs(n);
    double eps = 0.1 * std::pow(0.5, n);
    // the incremental subset scan leaves fp dust on an exactly null cut; the
    // direct flux of the reported argmin is zero to the last bit
    SConductanceResult r0 = s_conductance(rs.kernel, 0.0);
    CHECK(std::abs(r0.phi) <= 1e-12);
    CHECK(((r0.argmin >> 8) & 1u) == 1u);  // the argmin is the atom, possibly
    CHECK(set_mass(rs.kernel.target, r0.argmin) ==
          doctest::Approx(eps).epsilon(1e-13));  // padded by zero-mass states
    CHECK(flux(rs.kernel, r0.argmin) == 0.0);

    // once the atom drops below the floor, the cheapest admissible cut is one
    // row (or column) of the square, at ratio 1/4 independent of n
    SConductanceResult r = s_conductance(rs.kernel, 0.05);
    CHECK(r.phi == doctest::Approx(0.25).epsilon(1e-13));
    double mass = set_mass(rs.kernel.target, r.argmin);
    CHECK(mass == doctest::Approx((1.0 - eps) / 2).epsilon(1e-13));
    CHECK(flux(rs.kernel, r.argmin) / mass == doctest::Approx(0.25).epsilon(1e-12));
  }
  // at n = 0 the atom mass 0.1 still exceeds s = 0.05 and the floor is lost
  RandomScanDiscrete rs0 = isolated_atom_gibbs(0);
  SConductanceResult r = s_conductance(rs0.kernel, 0.05);
  CHECK(std::abs(r.phi) <= 1e-12);
  CHECK(((r.argmin >> 8) & 1u) == 1u);
  CHECK(flux(rs0.kernel, r.argmin) == 0.0);
}

TEST_CASE("isolated atom family converges in tv to the atomless square") {
  Eigen::VectorXd limit = Eigen::VectorXd::Zero(9);
  for (int a : {0, 1})
    for (int b : {0, 1}) limit[a + 3 * b] = 0.25;
  double prev = 1.0;
  for (int n = 0; n <= 6; ++n) {
    double eps = 0.1 * std::pow(0.5, n);
    double d = tv_distance(isolated_atom_target(n).pi, limit);
    CHECK(d == doctest::Approx(eps).epsilon(1e-13));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("isolated atom never mixes from a warm start") {
  // a 10-warm start may put mass 0.5 on the absorbing atom, so the chain stays
  // at tv >= 0.45 forever even though every conditional has kappa one
  RandomScanDiscrete rs = isolated_atom_gibbs(1);
  CHECK(kappa_min(rs) == doctest::Approx(1.0).epsilon(1e-12));
  MixingResult r = exact_mixing_time(rs.kernel, 0.25, 10.0, 256);
  CHECK(!r.converged);
  CHECK(r.tv >= 0.45 - 1e-12);
}

TEST_CASE("random-scan conductance of the independent square is computed, not assumed") {
  // with independent components every conditional is an exact draw, yet the
  // random-scan kernel pays the coordinate-selection factor: the computed
  // value is 1/4 (attained by a one-row set), not 1
  DiscreteTarget t = make_target({2, 2}, Eigen::VectorXd::Constant(4, 0.25));
  RandomScanDiscrete rs = gibbs_sampler(t);
  CHECK(kappa_min(rs) == doctest::Approx(1.0).epsilon(1e-12));
  SConductanceResult r = s_conductance(rs.kernel, 0.0);
  CHECK(r.phi == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(r.phi < 1.0);
}

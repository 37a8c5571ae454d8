#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cwmc/rng.hpp"

namespace cwmc {

// Counters for the work a sampler performs. target_evals counts conditional
// log-density evaluations (the unit of "likelihood evaluations" in cost
// reporting); gradient_evals counts evaluations that also requested a gradient.
struct Telemetry {
  long target_evals = 0;
  long gradient_evals = 0;
  long proposals = 0;
  long accepts = 0;
  long exact_draws = 0;
  long mode_finds = 0;

  void reset() { *this = Telemetry{}; }
};

// Smoothness certificates for one site's conditional log-density: strong
// concavity modulus m and gradient Lipschitz constant L (per scalar component).
struct SiteCertificates {
  bool valid = false;
  double m = 0.0;
  double L = 0.0;
};

// A target density factored into update sites. A site is the unit a
// conditional update touches: site s owns a contiguous span of the state
// vector, and its conditional density given the rest is what updates sample
// from or evaluate. Evaluations take the candidate value for the site
// separately so callers never copy the full state to score a proposal.
class BlockedTarget {
 public:
  virtual ~BlockedTarget() = default;

  virtual int dim() const = 0;
  virtual int num_sites() const = 0;
  virtual int site_offset(int s) const = 0;
  virtual int site_dim(int s) const = 0;

  // Log conditional density of site s at value v given the rest of x, up to a
  // constant in v. If grad is non-null it receives d/dv. Bumps telemetry.
  virtual double site_logpdf(int s, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                             Eigen::VectorXd* grad, Telemetry* tel) const = 0;

  // Whether v is inside the support of site s's conditional.
  virtual bool site_in_domain(int s, const Eigen::VectorXd& v) const { (void)s; (void)v; return true; }

  // Certificates may depend on the conditioning state (a precision that is
  // itself a coordinate changes them), so the full state is passed.
  virtual SiteCertificates site_certificates(int s, const Eigen::VectorXd& x) const {
    (void)s;
    (void)x;
    return {};
  }

  // Hessian of the negated log conditional (positive definite for log-concave
  // sites). Optional; updates that need it check has_site_hessian first.
  virtual bool has_site_hessian(int s) const { (void)s; return false; }
  virtual Eigen::MatrixXd site_hessian(int s, const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& v) const;

  // Exact draw from the conditional, for conjugate sites.
  virtual bool has_site_exact_draw(int s) const { (void)s; return false; }
  virtual void site_exact_draw(int s, Eigen::VectorXd& x, Rng& rng, Telemetry* tel) const;

  // Where derivative-free searches (hull bracketing) should start; defaults to
  // the current value, models may return a conditional-prior mean instead.
  virtual Eigen::VectorXd site_search_origin(int s, const Eigen::VectorXd& x) const {
    return site_value(s, x);
  }

  // Key identifying the conditional density of site s as a function, given the
  // current rest-of-state. Two sites with equal signatures have identical
  // conditionals, so per-visit caches (shared envelopes) may be reused.
  // Zero means "no sharing".
  virtual std::uint64_t site_signature(int s, const Eigen::VectorXd& x) const { (void)s; (void)x; return 0; }

  virtual std::string param_name(int index) const;

  Eigen::VectorXd site_value(int s, const Eigen::VectorXd& x) const {
    return x.segment(site_offset(s), site_dim(s));
  }
  void set_site_value(int s, Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    x.segment(site_offset(s), site_dim(s)) = v;
  }
};

// Scratch shared by updates within one block visit, keyed by site signature.
// Cleared by the kernel between block visits.
using VisitCache = std::unordered_map<std::uint64_t, std::shared_ptr<void>>;

// One conditional update rule applied to a single site.
class ConditionalUpdate {
 public:
  virtual ~ConditionalUpdate() = default;
  virtual void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng,
                     Telemetry& tel, VisitCache* cache) const = 0;
  virtual std::string name() const = 0;
};

// A block is a set of sites updated together in one visit, each with its own
// update rule. Coordinates within a block are visited in order; their
// conditionals must be mutually independent given the rest for the visit to
// equal a product update (the hierarchical models satisfy this by design).
struct BlockSpec {
  std::vector<int> sites;
  std::vector<std::shared_ptr<ConditionalUpdate>> updates;
  std::string label;
};

// Random-scan kernel: each step picks one block by inverse-CDF lookup on the
// block weights using a single uniform, then applies that block's updates.
class RandomScanKernel {
 public:
  RandomScanKernel(std::shared_ptr<const BlockedTarget> target, std::vector<BlockSpec> blocks,
                   Eigen::VectorXd weights);
  RandomScanKernel(std::shared_ptr<const BlockedTarget> target, std::vector<BlockSpec> blocks);

  // Applies one step in place and returns the index of the visited block.
  int step(Eigen::VectorXd& x, Rng& rng, Telemetry& tel) const;

  // Deterministic-scan pass: visits every block once, in order.
  void sweep(Eigen::VectorXd& x, Rng& rng, Telemetry& tel) const;

  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<BlockSpec>& blocks() const { return blocks_; }
  const BlockedTarget& target() const { return *target_; }

 private:
  std::shared_ptr<const BlockedTarget> target_;
  std::vector<BlockSpec> blocks_;
  Eigen::VectorXd weights_;
  std::vector<double> cdf_;
};

}  // namespace cwmc

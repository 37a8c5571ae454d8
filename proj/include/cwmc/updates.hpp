#pragma once

#include <functional>
#include <memory>
#include <string>

#include "cwmc/model.hpp"

namespace cwmc {

// Draws the site exactly from its conditional (conjugate sites).
class ExactConjugateUpdate : public ConditionalUpdate {
 public:
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "exact-conjugate"; }
};

// Adaptive-rejection draw from a 1-D log-concave conditional. With a
// strong-concavity certificate the initial hull points sit at mode +- 2/sqrt(m)
// (mode located by Newton when the site exposes a Hessian, by damped gradient
// ascent otherwise); without one the hull starts around the search origin and
// the envelope widens by doubling until both tails are bracketed. Envelopes
// are shared within a block visit between sites with equal signatures.
// Not safe to share one instance across threads (scratch buffers).
class ExactArsUpdate : public ConditionalUpdate {
 public:
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "exact-ars"; }

 private:
  mutable Eigen::VectorXd v_buf_, grad_buf_;
};

// Independence Metropolis-Hastings with a caller-supplied proposal. A draw
// outside the conditional's support is rejected (log ratio -inf), never an
// error.
class ImhUpdate : public ConditionalUpdate {
 public:
  struct Proposal {
    std::function<Eigen::VectorXd(Rng&)> draw;
    std::function<double(const Eigen::VectorXd&)> logpdf;
  };
  using ProposalFactory =
      std::function<Proposal(const BlockedTarget&, int, const Eigen::VectorXd&)>;

  explicit ImhUpdate(ProposalFactory factory) : factory_(std::move(factory)) {}
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "imh"; }

 private:
  ProposalFactory factory_;
};

// Independence Metropolis-Hastings from N(mode, m^-1 I): the mode of the
// conditional is located by damped Newton (gradient tolerance 1e-10, at most
// 100 iterations, failure is an error with a state dump) and the certificate's
// strong-concavity modulus m sets the proposal covariance.
class ImhAtModeUpdate : public ConditionalUpdate {
 public:
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "imh-at-mode"; }
};

// Random-walk Metropolis with step variance eta / (d_i * L_i) when the site
// has a smoothness certificate (eta defaults to 5.6644), or a fixed user sigma.
class RwmUpdate : public ConditionalUpdate {
 public:
  explicit RwmUpdate(double eta = 5.6644) : eta_(eta) {}
  static RwmUpdate with_fixed_sigma(double sigma);
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "rwm"; }

 private:
  double eta_;
  double fixed_sigma_ = 0.0;
};

// Barker proposal: per component, draw z ~ N(0, sigma^2) and flip its sign to
// +1 with probability 1/(1+exp(-z*g)) using the gradient at the current point,
// then accept with the exact Metropolis-Hastings ratio (one gradient
// evaluation at the current point and one at the proposal). sigma^2 is
// eta/(d_i*L_i) with a certificate (eta defaults to 1), or fixed.
class BarkerUpdate : public ConditionalUpdate {
 public:
  explicit BarkerUpdate(double eta = 1.0) : eta_(eta) {}
  static BarkerUpdate with_fixed_sigma(double sigma);
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "barker"; }

 private:
  double eta_;
  double fixed_sigma_ = 0.0;
  mutable Eigen::VectorXd grad_x_, grad_y_, v_y_;
};

// Gaussian random walk on log(v) for positive scalar sites, with the change
// of variables correction in the acceptance ratio.
class LogScaleRwmUpdate : public ConditionalUpdate {
 public:
  explicit LogScaleRwmUpdate(double sigma = 0.5) : sigma_(sigma) {}
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "log-rwm"; }

 private:
  double sigma_;
};

// Applies the inner update k times within the same visit.
class RepeatedUpdate : public ConditionalUpdate {
 public:
  RepeatedUpdate(std::shared_ptr<ConditionalUpdate> inner, int k);
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override;

 private:
  std::shared_ptr<ConditionalUpdate> inner_;
  int k_;
};

// Applies the inner update with probability 1/2, otherwise leaves the site
// unchanged.
class LazyUpdate : public ConditionalUpdate {
 public:
  explicit LazyUpdate(std::shared_ptr<ConditionalUpdate> inner) : inner_(std::move(inner)) {}
  void apply(const BlockedTarget& target, int site, Eigen::VectorXd& x, Rng& rng, Telemetry& tel,
             VisitCache* cache) const override;
  std::string name() const override { return "lazy(" + inner_->name() + ")"; }

 private:
  std::shared_ptr<ConditionalUpdate> inner_;
};

// Damped Newton ascent on a site's conditional log density. Throws after
// max_iter iterations without meeting the gradient tolerance.
Eigen::VectorXd find_site_mode(const BlockedTarget& target, int site, const Eigen::VectorXd& x,
                               Eigen::VectorXd v0, Telemetry& tel, double grad_tol = 1e-10,
                               int max_iter = 100);

}  // namespace cwmc

#include "cwmc/model.hpp"

#include <stdexcept>

namespace cwmc {

Eigen::MatrixXd BlockedTarget::site_hessian(int s, const Eigen::VectorXd&,
                                            const Eigen::VectorXd&) const {
  throw std::logic_error("site_hessian not available for site " + std::to_string(s));
}

void BlockedTarget::site_exact_draw(int s, Eigen::VectorXd&, Rng&, Telemetry*) const {
  throw std::logic_error("site_exact_draw not available for site " + std::to_string(s));
}

std::string BlockedTarget::param_name(int index) const {
  return "x" + std::to_string(index);
}

RandomScanKernel::RandomScanKernel(std::shared_ptr<const BlockedTarget> target,
                                   std::vector<BlockSpec> blocks, Eigen::VectorXd weights)
    : target_(std::move(target)), blocks_(std::move(blocks)), weights_(std::move(weights)) {
  if (blocks_.empty()) throw std::invalid_argument("RandomScanKernel: no blocks");
  if (weights_.size() != static_cast<Eigen::Index>(blocks_.size()))
    throw std::invalid_argument("RandomScanKernel: weight count != block count");
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0)) throw std::invalid_argument("RandomScanKernel: negative weight");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("RandomScanKernel: weights must sum to 1");
  for (const auto& b : blocks_) {
    if (b.sites.size() != b.updates.size())
      throw std::invalid_argument("RandomScanKernel: block sites/updates mismatch");
    for (size_t k = 0; k < b.sites.size(); ++k) {
      if (b.sites[k] < 0 || b.sites[k] >= target_->num_sites())
        throw std::invalid_argument("RandomScanKernel: bad site index");
      if (!b.updates[k]) throw std::invalid_argument("RandomScanKernel: null update");
    }
  }
  cdf_.resize(blocks_.size());
  double acc = 0.0;
  for (size_t i = 0; i < blocks_.size(); ++i) {
    acc += weights_[static_cast<Eigen::Index>(i)];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

RandomScanKernel::RandomScanKernel(std::shared_ptr<const BlockedTarget> target,
                                   std::vector<BlockSpec> blocks)
    : RandomScanKernel(target, blocks,
                       Eigen::VectorXd::Constant(static_cast<Eigen::Index>(blocks.size()),
                                                 1.0 / static_cast<double>(blocks.size()))) {}

int RandomScanKernel::step(Eigen::VectorXd& x, Rng& rng, Telemetry& tel) const {
  double u = rng.uniform();
  int b = 0;
  while (b + 1 < static_cast<int>(cdf_.size()) && u > cdf_[b]) ++b;
  const BlockSpec& block = blocks_[b];
  VisitCache cache;
  for (size_t k = 0; k < block.sites.size(); ++k)
    block.updates[k]->apply(*target_, block.sites[k], x, rng, tel, &cache);
  return b;
}

void RandomScanKernel::sweep(Eigen::VectorXd& x, Rng& rng, Telemetry& tel) const {
  for (const BlockSpec& block : blocks_) {
    VisitCache cache;
    for (size_t k = 0; k < block.sites.size(); ++k)
      block.updates[k]->apply(*target_, block.sites[k], x, rng, tel, &cache);
  }
}

}  // namespace cwmc

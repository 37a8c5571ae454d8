#pragma once

#include <functional>
#include <vector>

#include "cwmc/rng.hpp"

namespace cwmc {

// Adaptive rejection sampler for a log-concave density on (lo, hi), known up
// to a constant. The upper hull is built from tangent lines at evaluated
// points; every rejected proposal refines the hull. There is no squeeze test:
// each accept/reject decision evaluates the log density once, so evaluation
// counts stay proportional to draws plus rejections.
//
// The log density callback returns h(x) and writes h'(x) into *dh.
// If a sampled point lands above the hull by more than 1e-9 the density is
// not log-concave and sample() throws.
class ArsEnvelope {
 public:
  using LogDensity = std::function<double(double, double*)>;

  ArsEnvelope(LogDensity h, double lo, double hi, const std::vector<double>& init_xs,
              int max_hull_points = 64);

  double sample(Rng& rng);

  int hull_size() const { return static_cast<int>(xs_.size()); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  void insert_point(double x, double hx, double dhx);
  void ensure_integrable();
  void rebuild();
  double hull_value(double x) const;
  int pick_segment(Rng& rng) const;
  double sample_segment(int seg, Rng& rng) const;

  LogDensity h_;
  double lo_, hi_;
  int max_points_;
  std::vector<double> xs_, hs_, dhs_;
  // Segment i spans (z_[i], z_[i+1]) under the tangent at xs_[i];
  // z_ has size k+1 with z_[0] = lo and z_[k] = hi.
  std::vector<double> z_;
  std::vector<double> log_mass_;
  double offset_ = 0.0;  // subtracted from hs_ to keep exponentials in range
};

}  // namespace cwmc

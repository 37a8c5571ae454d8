#include "cwmc/ars.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

constexpr double kConcavityTol = 1e-9;
constexpr int kMaxRejects = 10000;

// log(1 - exp(x)) for x < 0
double log1mexp(double x) {
  if (x >= 0.0) throw std::logic_error("log1mexp: nonnegative argument");
  return x > -0.6931471805599453 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

}  // namespace

ArsEnvelope::ArsEnvelope(LogDensity h, double lo, double hi, const std::vector<double>& init_xs,
                         int max_hull_points)
    : h_(std::move(h)), lo_(lo), hi_(hi), max_points_(max_hull_points) {
  if (!(lo_ < hi_)) throw std::invalid_argument("ArsEnvelope: empty domain");
  if (init_xs.empty()) throw std::invalid_argument("ArsEnvelope: no initial points");
  for (double x : init_xs) {
    if (!(x > lo_ && x < hi_)) throw std::invalid_argument("ArsEnvelope: init point outside domain");
    double dh = 0.0;
    double hx = h_(x, &dh);
    insert_point(x, hx, dh);
  }
  if (xs_.empty()) throw std::invalid_argument("ArsEnvelope: no usable initial points");
  ensure_integrable();
  rebuild();
}

void ArsEnvelope::insert_point(double x, double hx, double dhx) {
  if (!std::isfinite(hx) || !std::isfinite(dhx))
    throw std::runtime_error("ArsEnvelope: non-finite log density at hull point");
  auto it = std::lower_bound(xs_.begin(), xs_.end(), x);
  size_t idx = static_cast<size_t>(it - xs_.begin());
  double scale = std::max({1.0, std::abs(x), xs_.empty() ? 0.0 : std::abs(xs_.back())});
  if (idx < xs_.size() && std::abs(xs_[idx] - x) < 1e-12 * scale) return;
  if (idx > 0 && std::abs(xs_[idx - 1] - x) < 1e-12 * scale) return;
  // slopes must strictly decrease for a concave h; a gross inversion means the
  // density is not log-concave, a borderline one is roundoff and the point is
  // dropped
  if (idx > 0 && dhx > dhs_[idx - 1] + kConcavityTol)
    throw std::runtime_error("ArsEnvelope: log-concavity violated (slope order)");
  if (idx < xs_.size() && dhs_[idx] > dhx + kConcavityTol)
    throw std::runtime_error("ArsEnvelope: log-concavity violated (slope order)");
  if (idx > 0 && dhx >= dhs_[idx - 1]) return;
  if (idx < xs_.size() && dhs_[idx] >= dhx) return;
  xs_.insert(xs_.begin() + idx, x);
  hs_.insert(hs_.begin() + idx, hx);
  dhs_.insert(dhs_.begin() + idx, dhx);
}

void ArsEnvelope::ensure_integrable() {
  // an unbounded left tail needs a positive leading slope, an unbounded right
  // tail a negative trailing slope; extend by doubling steps until bracketed
  double step = std::max(1.0, std::abs(xs_.front()) * 0.1);
  int guard = 0;
  while (std::isinf(lo_) && dhs_.front() <= 0.0) {
    if (++guard > 200) throw std::runtime_error("ArsEnvelope: failed to bracket left tail");
    double x = xs_.front() - step;
    step *= 2.0;
    double dh = 0.0;
    double hx = h_(x, &dh);
    insert_point(x, hx, dh);
  }
  step = std::max(1.0, std::abs(xs_.back()) * 0.1);
  guard = 0;
  while (std::isinf(hi_) && dhs_.back() >= 0.0) {
    if (++guard > 200) throw std::runtime_error("ArsEnvelope: failed to bracket right tail");
    double x = xs_.back() + step;
    step *= 2.0;
    double dh = 0.0;
    double hx = h_(x, &dh);
    insert_point(x, hx, dh);
  }
}

void ArsEnvelope::rebuild() {
  const int k = static_cast<int>(xs_.size());
  z_.assign(k + 1, 0.0);
  z_[0] = lo_;
  z_[k] = hi_;
  for (int i = 0; i + 1 < k; ++i) {
    double denom = dhs_[i] - dhs_[i + 1];
    double z;
    if (denom <= 0.0) {
      z = 0.5 * (xs_[i] + xs_[i + 1]);
    } else {
      z = (hs_[i + 1] - hs_[i] - xs_[i + 1] * dhs_[i + 1] + xs_[i] * dhs_[i]) / denom;
      z = std::clamp(z, xs_[i], xs_[i + 1]);
    }
    z_[i + 1] = z;
  }
  offset_ = *std::max_element(hs_.begin(), hs_.end());
  log_mass_.assign(k, -kInf);
  for (int i = 0; i < k; ++i) {
    double a = z_[i], b = z_[i + 1];
    if (!(b > a)) continue;
    double d = dhs_[i];
    double va = hs_[i] - offset_ + d * (a - xs_[i]);
    double vb = hs_[i] - offset_ + d * (b - xs_[i]);
    if (std::isinf(b)) {
      if (!(d < 0.0)) throw std::runtime_error("ArsEnvelope: non-integrable right segment");
      log_mass_[i] = va - std::log(-d);
    } else if (std::isinf(a)) {
      if (!(d > 0.0)) throw std::runtime_error("ArsEnvelope: non-integrable left segment");
      log_mass_[i] = vb - std::log(d);
    } else {
      double width = b - a;
      if (std::abs(d) * width < 1e-12) {
        log_mass_[i] = 0.5 * (va + vb) + std::log(width);
      } else if (d > 0.0) {
        log_mass_[i] = vb + log1mexp(-d * width) - std::log(d);
      } else {
        log_mass_[i] = va + log1mexp(d * width) - std::log(-d);
      }
    }
  }
}

double ArsEnvelope::hull_value(double x) const {
  auto it = std::upper_bound(z_.begin() + 1, z_.end() - 1, x);
  int i = static_cast<int>(it - (z_.begin() + 1));
  return hs_[i] + dhs_[i] * (x - xs_[i]);
}

int ArsEnvelope::pick_segment(Rng& rng) const {
  double total = log_sum_exp(log_mass_);
  if (!std::isfinite(total)) throw std::runtime_error("ArsEnvelope: vanishing hull mass");
  double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (size_t i = 0; i < log_mass_.size(); ++i) {
    if (log_mass_[i] == -kInf) continue;
    last = static_cast<int>(i);
    acc += std::exp(log_mass_[i] - total);
    if (u <= acc) return last;
  }
  return last;
}

double ArsEnvelope::sample_segment(int seg, Rng& rng) const {
  double a = z_[seg], b = z_[seg + 1];
  double d = dhs_[seg];
  double u = rng.uniform();
  if (std::isinf(b)) return a + std::log1p(-u) / d;       // d < 0
  if (std::isinf(a)) return b + std::log(u) / d;          // d > 0
  double width = b - a;
  if (std::abs(d) * width < 1e-12) return a + u * width;
  if (d > 0.0) {
    // inverse CDF written from the top end so exp stays bounded
    return b + std::log(u + (1.0 - u) * std::exp(-d * width)) / d;
  }
  return a + std::log1p(u * std::expm1(d * width)) / d;
}

double ArsEnvelope::sample(Rng& rng) {
  for (int attempt = 0; attempt < kMaxRejects; ++attempt) {
    int seg = pick_segment(rng);
    if (seg < 0) throw std::runtime_error("ArsEnvelope: no sampleable segment");
    double x = sample_segment(seg, rng);
    x = std::clamp(x, std::nextafter(lo_, hi_), std::nextafter(hi_, lo_));
    double dh = 0.0;
    double hx = h_(x, &dh);
    double ux = hull_value(x);
    if (hx - ux > kConcavityTol)
      throw std::runtime_error("ArsEnvelope: log-concavity violated (point above hull)");
    if (std::log(rng.uniform()) <= hx - ux) return x;
    if (static_cast<int>(xs_.size()) < max_points_) {
      insert_point(x, hx, dh);
      rebuild();
    }
  }
  throw std::runtime_error("ArsEnvelope: rejection loop failed to terminate");
}

}  // namespace cwmc

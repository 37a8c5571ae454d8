#include "cwmc/diag.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::logic_error("fft_radix2: size must be a power of 2");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& z : a) z /= static_cast<double>(n);
}

// full autocovariance sequence gamma_0..gamma_{n-1} (biased, 1/n norm)
std::vector<double> autocov_fft(const Eigen::VectorXd& centered) {
  const long n = centered.size();
  size_t m = 1;
  while (m < static_cast<size_t>(2 * n)) m <<= 1;
  std::vector<std::complex<double>> buf(m, {0.0, 0.0});
  for (long t = 0; t < n; ++t) buf[static_cast<size_t>(t)] = {centered[t], 0.0};
  fft_radix2(buf, false);
  for (auto& z : buf) z = z * std::conj(z);
  fft_radix2(buf, true);
  std::vector<double> gamma(static_cast<size_t>(n));
  for (long k = 0; k < n; ++k) gamma[static_cast<size_t>(k)] = buf[static_cast<size_t>(k)].real() / static_cast<double>(n);
  return gamma;
}

double autocov_direct(const Eigen::VectorXd& centered, long lag) {
  const long n = centered.size();
  double acc = 0.0;
  for (long t = 0; t + lag < n; ++t) acc += centered[t] * centered[t + lag];
  return acc / static_cast<double>(n);
}

}  // namespace

IatEstimate geyer_iat(const Eigen::VectorXd& series) {
  IatEstimate r;
  const long n = series.size();
  if (n < 4) return r;
  Eigen::VectorXd c = series.array() - series.mean();
  double gamma0 = c.squaredNorm() / static_cast<double>(n);
  double scale = c.lpNorm<Eigen::Infinity>();
  if (!(gamma0 > 0.0) || !(scale > 0.0)) return r;  // constant trace

  // pair sums of autocovariances, accumulated while positive; lags are
  // computed on demand (direct sums up to lag 64, then one FFT pass for the
  // full sequence if the pairs are still positive)
  const long direct_cap = std::min<long>(64, n - 1);
  std::vector<double> gamma;
  gamma.reserve(static_cast<size_t>(direct_cap) + 1);
  bool full = false;
  auto lag_at = [&](long lag) -> double {
    while (!full && static_cast<long>(gamma.size()) <= lag) {
      long next = static_cast<long>(gamma.size());
      if (next > direct_cap) {
        gamma = autocov_fft(c);
        full = true;
        break;
      }
      gamma.push_back(autocov_direct(c, next));
    }
    return gamma[static_cast<size_t>(lag)];
  };
  double sum_pairs = 0.0;
  long k = 0;
  for (;;) {
    long m0 = 2 * k, m1 = 2 * k + 1;
    if (m1 >= n - 1) break;
    double pair = lag_at(m0) + lag_at(m1);
    if (pair <= 0.0) break;
    sum_pairs += pair;
    r.lags = m1;
    ++k;
  }
  // antithetic chains can push the estimate below 1; only guard against a
  // nonpositive value from an immediately negative first pair
  r.iat = std::max(1e-3, 2.0 * sum_pairs / gamma0 - 1.0);
  r.ess = static_cast<double>(n) / r.iat;
  r.defined = true;
  return r;
}

TraceDiagnostics diagnose_trace(const Eigen::MatrixXd& trace, double burnin_frac) {
  if (burnin_frac < 0.0 || burnin_frac >= 1.0)
    throw std::invalid_argument("diagnose_trace: burn-in fraction must be in [0,1)");
  const long n = trace.rows();
  long drop = static_cast<long>(std::floor(burnin_frac * static_cast<double>(n)));
  long used = n - drop;
  if (used < 4) throw std::invalid_argument("diagnose_trace: too few iterations after burn-in");
  TraceDiagnostics d;
  d.n_used = used;
  d.per_param.reserve(static_cast<size_t>(trace.cols()));
  for (Eigen::Index j = 0; j < trace.cols(); ++j) {
    IatEstimate e = geyer_iat(trace.col(j).tail(used));
    if (!e.defined) d.any_undefined = true;
    if (e.defined && e.iat > d.max_iat) {
      d.max_iat = e.iat;
      d.argmax = static_cast<int>(j);
    }
    d.per_param.push_back(e);
  }
  return d;
}

AggregateSummary aggregate_median(std::vector<double> values) {
  AggregateSummary s;
  s.n = static_cast<int>(values.size());
  if (values.empty()) throw std::invalid_argument("aggregate_median: no values");
  std::sort(values.begin(), values.end());
  auto quantile_sorted = [&](double q) {
    double pos = q * (static_cast<double>(values.size()) - 1.0);
    size_t lo = static_cast<size_t>(std::floor(pos));
    size_t hi = static_cast<size_t>(std::ceil(pos));
    double w = pos - static_cast<double>(lo);
    return (1.0 - w) * values[lo] + w * values[hi];
  };
  s.median = quantile_sorted(0.5);
  s.q1 = quantile_sorted(0.25);
  s.q3 = quantile_sorted(0.75);
  return s;
}

}  // namespace cwmc

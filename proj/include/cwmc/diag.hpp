#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cwmc {

// Integrated autocorrelation time by Geyer's initial positive sequence:
// autocovariances are paired as Gamma_k = gamma_{2k} + gamma_{2k+1} and summed
// while positive. A constant series has no defined autocorrelation time and is
// flagged instead of reported.
struct IatEstimate {
  double iat = 0.0;
  double ess = 0.0;
  bool defined = false;
  long lags = 0;  // truncation lag actually used
};

IatEstimate geyer_iat(const Eigen::VectorXd& series);

// Per-column IAT of a trace matrix (rows are iterations) after dropping the
// initial burn-in fraction.
struct TraceDiagnostics {
  std::vector<IatEstimate> per_param;
  double max_iat = 0.0;
  int argmax = -1;
  bool any_undefined = false;
  long n_used = 0;
};

TraceDiagnostics diagnose_trace(const Eigen::MatrixXd& trace, double burnin_frac = 0.1);

// Median and quartiles over replicates.
struct AggregateSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  int n = 0;
};

AggregateSummary aggregate_median(std::vector<double> values);

}  // namespace cwmc

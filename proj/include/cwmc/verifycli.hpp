#pragma once

#include <string>

#include "cwmc/discrete.hpp"
#include "cwmc/errors.hpp"

namespace cwmc {

// Sparse kernel entries "row,col,value" (0-based indices, one per line, an
// optional header line is skipped). Missing entries are zero.
Eigen::MatrixXd read_kernel_csv(const std::string& path, int n);

// Target weights, one "state,prob" or bare "prob" per line. The state count
// fixes the kernel dimension; at most 24 states (the conductance scan is
// exhaustive over subsets).
Eigen::VectorXd read_target_csv(const std::string& path);

struct VerifyOptions {
  std::string kernel_path;
  std::string target_path;
  std::string report_path;  // empty = stdout only
  double row_tol = 1e-10;
  double stationarity_tol = 1e-10;
  double reversibility_tol = 1e-9;
  double monotone_tol = 1e-12;
  double cheeger_tol = 1e-9;
};

// Checks a user-supplied kernel/target pair: row sums, stationarity, the
// conductance profile (monotone in s, phi <= phi-with-offset), and for
// reversible kernels the spectral sandwich gap/2 <= phi_0 <= sqrt(2 gap).
// Writes a JSON report and returns the process exit code (0 clean,
// 3 with violations).
int verify_conductance_main(const VerifyOptions& opts);

}  // namespace cwmc

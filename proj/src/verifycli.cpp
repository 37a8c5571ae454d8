#include "cwmc/verifycli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "cwmc/conductance.hpp"
#include "cwmc/mathutil.hpp"

namespace cwmc {

namespace {

constexpr int kMaxStates = 24;  // the subset scan is exhaustive

std::vector<std::vector<double>> read_numeric_rows(const std::string& path, size_t min_fields,
                                                   size_t max_fields) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string tok;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        size_t used = 0;
        double v = std::stod(tok, &used);
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size()) throw std::invalid_argument(tok);
        fields.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && lineno == 1) continue;  // header line
      throw ConfigError(path + ":" + std::to_string(lineno) + ": not a numeric row");
    }
    if (fields.size() < min_fields || fields.size() > max_fields)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(min_fields) +
                        (max_fields != min_fields ? "-" + std::to_string(max_fields) : "") +
                        " fields");
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ConfigError(path + ": no data rows");
  return rows;
}

int as_index(double v, const std::string& what) {
  double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || r < 0.0 || r > 1e9)
    throw ConfigError("bad " + what + " index " + std::to_string(v));
  return static_cast<int>(r);
}

}  // namespace

Eigen::VectorXd read_target_csv(const std::string& path) {
  auto rows = read_numeric_rows(path, 1, 2);
  const size_t width = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != width) throw ConfigError(path + ": mixed row widths");
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw ConfigError(path + ": need at least 2 states");
  if (n > kMaxStates)
    throw ConfigError(path + ": " + std::to_string(n) + " states exceeds the exhaustive limit " +
                      std::to_string(kMaxStates));
  Eigen::VectorXd pi(n);
  if (width == 1) {
    for (int i = 0; i < n; ++i) pi[i] = rows[static_cast<size_t>(i)][0];
  } else {
    std::vector<bool> seen(static_cast<size_t>(n), false);
    pi.setZero();
    for (const auto& r : rows) {
      int idx = as_index(r[0], "state");
      if (idx >= n) throw ConfigError(path + ": state index " + std::to_string(idx) +
                                      " out of range for " + std::to_string(n) + " rows");
      if (seen[static_cast<size_t>(idx)])
        throw ConfigError(path + ": duplicate state " + std::to_string(idx));
      seen[static_cast<size_t>(idx)] = true;
      pi[idx] = r[1];
    }
  }
  return pi;
}

Eigen::MatrixXd read_kernel_csv(const std::string& path, int n) {
  auto rows = read_numeric_rows(path, 3, 3);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> filled(n, n);
  filled.setConstant(false);
  for (const auto& r : rows) {
    int i = as_index(r[0], "row");
    int j = as_index(r[1], "col");
    if (i >= n || j >= n)
      throw ConfigError(path + ": entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") out of range for " + std::to_string(n) + " states");
    if (filled(i, j))
      throw ConfigError(path + ": duplicate entry (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
    filled(i, j) = true;
    P(i, j) = r[2];
  }
  return P;
}

int verify_conductance_main(const VerifyOptions& opts) {
  Eigen::VectorXd pi = read_target_csv(opts.target_path);
  const int n = static_cast<int>(pi.size());
  Eigen::MatrixXd P = read_kernel_csv(opts.kernel_path, n);

  nlohmann::json report;
  std::vector<std::string> violations;
  report["n"] = n;
  report["kernel"] = opts.kernel_path;
  report["target"] = opts.target_path;

  if (pi.minCoeff() < 0.0) throw ConfigError("target has a negative weight");
  double target_sum = pi.sum();
  report["target_sum"] = target_sum;
  if (std::abs(target_sum - 1.0) > 1e-8) {
    violations.push_back("target weights sum to " + std::to_string(target_sum) + ", not 1");
    if (!(target_sum > 0.0)) throw ConfigError("target has no mass");
    pi /= target_sum;  // analysis continues on the normalized target
    report["target_renormalized"] = true;
  }

  double min_entry = P.minCoeff();
  report["min_kernel_entry"] = min_entry;
  if (min_entry < -1e-15) violations.push_back("kernel has a negative entry");
  double row_resid = (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
  report["row_sum_residual"] = row_resid;
  if (row_resid > opts.row_tol)
    violations.push_back("row sums deviate from 1 by " + std::to_string(row_resid));

  // the spectral and conductance analysis needs an actual stochastic matrix;
  // with structurally broken input, report what was found and stop there
  if (row_resid > 1e-9 || min_entry < -1e-12) {
    report["analysis_skipped"] = "kernel is not row-stochastic";
    report["violations"] = violations;
    report["ok"] = false;
    std::string text = report.dump(2);
    std::cout << text << std::endl;
    if (!opts.report_path.empty()) {
      std::ofstream out(opts.report_path);
      if (!out) throw std::runtime_error("cannot open " + opts.report_path);
      out << text << '\n';
    }
    return 3;
  }

  DiscreteTarget target;
  target.dims = {n};
  target.pi = pi;
  DiscreteKernel k = make_kernel(target, P.cwiseMax(0.0), opts.reversibility_tol, 1e-10);

  report["stationarity_residual"] = k.stationarity_residual;
  if (k.stationarity_residual > opts.stationarity_tol)
    violations.push_back("target is not stationary (residual " +
                         std::to_string(k.stationarity_residual) + ")");

  report["reversible"] = k.reversible;
  report["flux_asymmetry"] = k.reversibility_residual;
  report["positive_semidefinite"] = k.psd;
  report["min_eigenvalue"] = k.min_eigenvalue;
  report["spectral_gap"] = k.spectral_gap;

  std::vector<double> s_grid;
  for (int i = 0; i < 10; ++i) s_grid.push_back(0.05 * i);
  auto profile = s_conductance_profile(k, s_grid);
  nlohmann::json prof = nlohmann::json::array();
  for (const auto& row : profile) {
    nlohmann::json entry;
    entry["s"] = row.s;
    entry["admissible"] = row.any_admissible;
    if (row.any_admissible) {
      entry["phi"] = row.phi;
      entry["phi_offset"] = row.phi_alt;
      std::vector<int> states;
      for (int x = 0; x < n; ++x)
        if (row.argmin & (1u << x)) states.push_back(x);
      entry["argmin"] = states;
    }
    prof.push_back(entry);
  }
  report["conductance_profile"] = prof;

  for (size_t i = 0; i + 1 < profile.size(); ++i) {
    if (!profile[i].any_admissible || !profile[i + 1].any_admissible) continue;
    if (profile[i + 1].phi < profile[i].phi - opts.monotone_tol) {
      violations.push_back("conductance profile decreases between s=" +
                           std::to_string(profile[i].s) + " and s=" +
                           std::to_string(profile[i + 1].s));
      break;
    }
  }
  for (const auto& row : profile) {
    if (row.any_admissible && row.phi > row.phi_alt + opts.monotone_tol) {
      violations.push_back("phi exceeds the offset variant at s=" + std::to_string(row.s));
      break;
    }
  }

  if (k.reversible && profile.front().any_admissible) {
    double phi0 = profile.front().phi;
    double lower = 0.5 * k.spectral_gap;
    double upper = std::sqrt(std::max(0.0, 2.0 * k.spectral_gap));
    nlohmann::json cheeger;
    cheeger["phi0"] = phi0;
    cheeger["gap_half"] = lower;
    cheeger["sqrt_2gap"] = upper;
    report["cheeger"] = cheeger;
    if (phi0 < lower - opts.cheeger_tol)
      violations.push_back("conductance below spectral lower bound gap/2");
    if (phi0 > upper + opts.cheeger_tol)
      violations.push_back("conductance above spectral upper bound sqrt(2 gap)");
  }

  report["violations"] = violations;
  report["ok"] = violations.empty();

  std::string text = report.dump(2);
  std::cout << text << std::endl;
  if (!opts.report_path.empty()) {
    std::ofstream out(opts.report_path);
    if (!out) throw std::runtime_error("cannot open " + opts.report_path);
    out << text << '\n';
  }
  return violations.empty() ? 0 : 3;
}

}  // namespace cwmc

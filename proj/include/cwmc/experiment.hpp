#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cwmc/diag.hpp"
#include "cwmc/diffusion.hpp"
#include "cwmc/errors.hpp"
#include "cwmc/hier_model.hpp"
#include "cwmc/logreg_model.hpp"
#include "cwmc/updates.hpp"

namespace cwmc {

// A sampler string names the update rule for the latent block:
//   gibbs-ars | gibbs-conj | mwg-imh | mwg-imh-mode | mwg-rwm | mwg-barker
// with an optional ":k=<int>" suffix repeating the update k times per visit.
struct SamplerSpec {
  std::string raw;
  std::string base;
  int k = 1;
};

SamplerSpec parse_sampler_spec(const std::string& s);

struct ExperimentConfig {
  std::vector<int> groups = {128, 256, 512, 1024};  // J grid
  int obs_per_group = 10;                           // m
  std::vector<int> covariates = {1};                // l grid (hier-covariates)
  std::vector<int> dims = {20, 60};                 // d grid (logreg-alpha)
  std::vector<std::string> samplers = {"gibbs-ars", "mwg-barker"};
  long iters = 20000;
  double burnin = 0.1;
  int reps = 20;
  std::uint64_t seed = 1;
  std::string out = "results";
  bool plot = false;
  bool full_scale = false;
  int threads = 0;  // 0 = hardware concurrency

  // start heuristic knobs: psi is drawn uniformly in a ball of radius
  // c/sqrt(J) around the marginal MLE, then the latent block is warmed with
  // warm_start_sweeps(J, kappa) passes
  double start_c = 0.5;
  double start_kappa = 0.5;

  // diffusion
  std::string drift = "sine";
  std::vector<int> n_obs = {4, 8, 16, 32, 64};
  int bridge_points = 32;  // R: imputed subintervals per segment
  double theta_true = 1.0;
  double horizon = 1.0;  // T
};

// One chain's diagnostics. For the regression model the CSV reuses the J
// column for d and the l column for n.
struct ChainResult {
  std::string grid_id;    // aggregation key, e.g. "J256:m10:l1"
  std::string config_id;  // grid_id plus ":rep<r>"
  std::string sampler;
  std::string tag;  // extra plot-label qualifier (parameterization for logreg)
  int J = 0;
  int l = 0;
  int rep = 0;
  bool failed = false;
  std::string error;
  std::vector<std::string> params;  // reported parameters; last is "max"
  std::vector<double> iat;
  std::vector<double> ess;
  double cost = 0.0;  // target density evaluations per iteration
};

// Fixed-size worker pool; jobs must not throw.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned n);
  ~ThreadPool();
  void submit(std::function<void()> job);
  void wait_idle();

 private:
  void worker();
  std::vector<std::thread> workers_;
  std::deque<std::function<void()>> queue_;
  std::mutex mu_;
  std::condition_variable cv_, idle_cv_;
  int active_ = 0;
  bool stop_ = false;
};

// ceil(log J / -log(1 - kappa^2/2)): sweeps of the latent block needed to
// forget a warm start when each coordinate update contracts at rate kappa.
long warm_start_sweeps(int J, double kappa);

// Builds the update rule for the latent sites of the hierarchical model.
std::shared_ptr<ConditionalUpdate> make_hier_theta_update(const SamplerSpec& spec,
                                                          const HierModel& model);

// Same for the regression coefficient block.
std::shared_ptr<ConditionalUpdate> make_logreg_coef_update(const SamplerSpec& spec,
                                                           const LogRegAlphaModel& model);

// Overdispersed but feasible start: psi near the marginal MLE (method of
// moments for l > 1), theta_jk uniform in mu_k +- 3/sqrt(tau_k), then
// warm_start_sweeps(J, kappa) passes of theta_update with psi held fixed.
// With c == 0 psi starts exactly at the estimate.
Eigen::VectorXd feasible_start_hier(const HierModel& model, ConditionalUpdate& theta_update,
                                    double c, double kappa, Rng& rng, Telemetry& tel);

std::vector<ChainResult> run_hier_grid(const ExperimentConfig& cfg, bool covariate_mode);
std::vector<ChainResult> run_logreg_grid(const ExperimentConfig& cfg);

struct DiffusionRunSummary {
  int n_obs = 0;
  double bridge_acceptance = 0.0;
  double theta_mean = 0.0;
  double theta_sd = 0.0;
  double theta_iat = 0.0;
  Eigen::VectorXd theta_trace;
};

DiffusionRunSummary run_diffusion_chain(const ExperimentConfig& cfg, int n_obs);

void write_results_csv(const std::string& path, const std::vector<ChainResult>& rows);
void write_median_csv(const std::string& path, const std::vector<ChainResult>& rows);

// Entry points behind the CLI. Return the process exit code: 0 on success,
// 4 when more than 20% of replicates failed (throwing ConfigError for exit 2
// and letting other exceptions escape for exit 3).
int hier_experiment_main(ExperimentConfig cfg, bool covariate_mode);
int logreg_experiment_main(ExperimentConfig cfg);
int diffusion_experiment_main(ExperimentConfig cfg);

}  // namespace cwmc

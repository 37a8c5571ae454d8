#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cwmc/experiment.hpp"
#include "cwmc/verifycli.hpp"

namespace {

void add_common_flags(CLI::App* cmd, cwmc::ExperimentConfig& cfg) {
  cmd->add_option("--samplers", cfg.samplers,
                  "update rules for the latent block, e.g. gibbs-ars mwg-barker:k=100")
      ->delimiter(',');
  cmd->add_option("--iters", cfg.iters, "recorded sweeps per chain");
  cmd->add_option("--burnin", cfg.burnin, "fraction of sweeps dropped before diagnostics");
  cmd->add_option("--reps", cfg.reps, "replicate chains per grid point");
  cmd->add_option("--seed", cfg.seed, "master seed; all substreams derive from it");
  cmd->add_option("--out", cfg.out, "output path stem for CSV/SVG files");
  cmd->add_flag("--plot", cfg.plot, "also write an SVG summary plot");
  cmd->add_flag("--full-scale", cfg.full_scale, "larger grid, more reps and iterations");
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
  cmd->add_option("--start-c", cfg.start_c,
                  "radius factor of the start ball around the hyperparameter estimate");
  cmd->add_option("--start-kappa", cfg.start_kappa, "assumed per-sweep contraction for warm-up");
  cmd->set_config("--config", "", "key=value file; command-line flags win");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordinate-wise MCMC experiments and kernel checks"};
  app.require_subcommand(1);

  auto* experiment = app.add_subcommand("experiment", "run a sampler comparison");
  experiment->require_subcommand(1);

  cwmc::ExperimentConfig hier_cfg;
  auto* hier = experiment->add_subcommand(
      "hier-logistic", "random-effects logistic model, mixing across group counts");
  hier->add_option("--groups", hier_cfg.groups, "group counts J")->delimiter(',');
  hier->add_option("--obs-per-group", hier_cfg.obs_per_group, "observations m per group");
  add_common_flags(hier, hier_cfg);

  cwmc::ExperimentConfig cov_cfg;
  cov_cfg.groups = {30};
  cov_cfg.obs_per_group = 30;
  cov_cfg.covariates = {1, 2, 3, 4, 5};
  cov_cfg.samplers = {"mwg-imh-mode", "mwg-barker"};
  cov_cfg.iters = 10000;
  cov_cfg.reps = 10;
  auto* cov = experiment->add_subcommand(
      "hier-covariates", "same model, mixing across the covariate count");
  cov->add_option("--groups", cov_cfg.groups, "group counts J")->delimiter(',');
  cov->add_option("--obs-per-group", cov_cfg.obs_per_group, "observations m per group");
  cov->add_option("--covariates", cov_cfg.covariates, "covariate counts l")->delimiter(',');
  add_common_flags(cov, cov_cfg);

  cwmc::ExperimentConfig lr_cfg;
  lr_cfg.samplers = {"mwg-barker:k=100"};
  lr_cfg.iters = 5000;
  lr_cfg.reps = 5;
  auto* logreg = experiment->add_subcommand(
      "logreg-alpha", "logistic regression with unknown prior scale, centered vs non-centered");
  logreg->add_option("--dims", lr_cfg.dims, "coefficient dimensions d (n = d/2)")->delimiter(',');
  add_common_flags(logreg, lr_cfg);

  cwmc::ExperimentConfig da_cfg;
  auto* diffusion = experiment->add_subcommand(
      "diffusion", "drift inference with Brownian-bridge data augmentation");
  diffusion->add_option("--drift", da_cfg.drift, "drift family: sine or ou");
  diffusion->add_option("--N", da_cfg.n_obs, "observation counts")->delimiter(',');
  diffusion->add_option("--R", da_cfg.bridge_points, "imputed subintervals per segment");
  diffusion->add_option("--theta-true", da_cfg.theta_true, "drift coefficient used to simulate data");
  diffusion->add_option("--T", da_cfg.horizon, "observation horizon");
  diffusion->add_option("--iters", da_cfg.iters, "sweeps");
  diffusion->add_option("--burnin", da_cfg.burnin, "fraction dropped before moment summaries");
  diffusion->add_option("--seed", da_cfg.seed, "master seed");
  diffusion->add_option("--out", da_cfg.out, "output path stem");
  diffusion->add_flag("--plot", da_cfg.plot, "acceptance-vs-N SVG");
  diffusion->add_flag("--full-scale", da_cfg.full_scale, "extend to N = 256 and longer chains");
  diffusion->set_config("--config", "", "key=value file; command-line flags win");

  auto* verify = app.add_subcommand("verify", "machine-check a kernel");
  verify->require_subcommand(1);
  cwmc::VerifyOptions vopts;
  auto* cond = verify->add_subcommand(
      "conductance", "stationarity, reversibility and conductance checks on a CSV kernel");
  cond->add_option("--kernel", vopts.kernel_path, "row,col,value triplets")->required();
  cond->add_option("--target", vopts.target_path, "stationary weights, one state per line")
      ->required();
  cond->add_option("--report", vopts.report_path, "also write the JSON report here");
  cond->add_option("--row-tol", vopts.row_tol, "row sum tolerance");
  cond->add_option("--stationarity-tol", vopts.stationarity_tol, "stationarity tolerance");

  CLI11_PARSE(app, argc, argv);

  try {
    if (hier->parsed()) return cwmc::hier_experiment_main(hier_cfg, false);
    if (cov->parsed()) return cwmc::hier_experiment_main(cov_cfg, true);
    if (logreg->parsed()) return cwmc::logreg_experiment_main(lr_cfg);
    if (diffusion->parsed()) return cwmc::diffusion_experiment_main(da_cfg);
    if (cond->parsed()) return cwmc::verify_conductance_main(vopts);
    std::fprintf(stderr, "error: no subcommand given\n");
    return 2;
  } catch (const cwmc::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

#include "cwmc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>

#include "cwmc/mathutil.hpp"
#include "cwmc/svgplot.hpp"

namespace cwmc {

namespace {

// substream tags so dataset and chain randomness never collide
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kChainStream = 2;
constexpr std::uint64_t kDiffusionDataStream = 11;
constexpr std::uint64_t kDiffusionChainStream = 12;

ImhUpdate::Proposal gaussian_proposal(Eigen::VectorXd mean, Eigen::VectorXd sd) {
  ImhUpdate::Proposal p;
  p.draw = [mean, sd](Rng& rng) {
    Eigen::VectorXd v(mean.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal(mean[i], sd[i]);
    return v;
  };
  p.logpdf = [mean, sd](const Eigen::VectorXd& v) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) lp += normal_logpdf(v[i], mean[i], sd[i]);
    return lp;
  };
  return p;
}

// proposal = conditional prior of the group effects given the current
// hyperparameters: theta_jk ~ N(mu_k, 1/tau_k)
ImhUpdate::ProposalFactory hier_prior_proposal() {
  return [](const BlockedTarget& t, int, const Eigen::VectorXd& x) {
    const auto* hm = dynamic_cast<const HierModel*>(&t);
    if (!hm) throw std::logic_error("hier prior proposal used with a different target");
    Eigen::VectorXd mu = hm->mu_of(x);
    Eigen::VectorXd sd = hm->tau_of(x).cwiseSqrt().cwiseInverse();
    return gaussian_proposal(std::move(mu), std::move(sd));
  };
}

// proposal = conditional prior of the coefficient block: N(0, alpha/d) per
// coordinate when centered, N(0, 1/d) when non-centered
ImhUpdate::ProposalFactory logreg_prior_proposal() {
  return [](const BlockedTarget& t, int, const Eigen::VectorXd& x) {
    const auto* lm = dynamic_cast<const LogRegAlphaModel*>(&t);
    if (!lm) throw std::logic_error("logreg prior proposal used with a different target");
    const int d = lm->coef_dim();
    double var = (lm->centered() ? x[d] : 1.0) / static_cast<double>(d);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sd = Eigen::VectorXd::Constant(d, std::sqrt(var));
    return gaussian_proposal(std::move(mean), std::move(sd));
  };
}

std::shared_ptr<ConditionalUpdate> wrap_repeats(std::shared_ptr<ConditionalUpdate> base, int k) {
  if (k <= 1) return base;
  return std::make_shared<RepeatedUpdate>(std::move(base), k);
}

// a constant post-burn-in column has no finite autocorrelation estimate; it is
// reported at the measurement ceiling (the window length) with ess 1
double iat_or_ceiling(const IatEstimate& e, long n_used) {
  return e.defined ? e.iat : static_cast<double>(n_used);
}

double ess_or_floor(const IatEstimate& e) { return e.defined ? e.ess : 1.0; }

void fill_reported_params(ChainResult& r, const BlockedTarget& model,
                          const TraceDiagnostics& diag, const std::vector<int>& report_idx) {
  for (int idx : report_idx) {
    r.params.push_back(model.param_name(idx));
    r.iat.push_back(iat_or_ceiling(diag.per_param[static_cast<size_t>(idx)], diag.n_used));
    r.ess.push_back(ess_or_floor(diag.per_param[static_cast<size_t>(idx)]));
  }
  // worst coordinate over the whole state, not only the reported subset
  double worst = -kInf;
  double worst_ess = 0.0;
  for (const IatEstimate& e : diag.per_param) {
    double v = iat_or_ceiling(e, diag.n_used);
    if (v > worst) {
      worst = v;
      worst_ess = ess_or_floor(e);
    }
  }
  r.params.push_back("max");
  r.iat.push_back(worst);
  r.ess.push_back(worst_ess);
}

std::vector<int> all_indices(int dim) {
  std::vector<int> idx(static_cast<size_t>(dim));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

ChainResult run_hier_chain(const HierData& data, const SamplerSpec& spec,
                           const ExperimentConfig& cfg, std::uint64_t chain_seed) {
  auto model = std::make_shared<HierModel>(data);
  auto theta_update = make_hier_theta_update(spec, *model);
  std::vector<BlockSpec> blocks(2);
  blocks[0].sites = {model->psi_site()};
  blocks[0].updates = {std::make_shared<ExactConjugateUpdate>()};
  blocks[0].label = "psi";
  blocks[1].sites.resize(static_cast<size_t>(data.J));
  std::iota(blocks[1].sites.begin(), blocks[1].sites.end(), 0);
  blocks[1].updates.assign(static_cast<size_t>(data.J), theta_update);
  blocks[1].label = "theta";
  RandomScanKernel kernel(model, blocks);

  Rng rng(chain_seed);
  Telemetry tel;
  Eigen::VectorXd x =
      feasible_start_hier(*model, *theta_update, cfg.start_c, cfg.start_kappa, rng, tel);
  tel.reset();  // cost covers the recorded run, not the warm start

  Eigen::MatrixXd trace(cfg.iters, model->dim());
  for (long it = 0; it < cfg.iters; ++it) {
    kernel.sweep(x, rng, tel);
    trace.row(it) = x;
  }
  TraceDiagnostics diag = diagnose_trace(trace, cfg.burnin);

  ChainResult r;
  r.cost = static_cast<double>(tel.target_evals) / static_cast<double>(cfg.iters);
  std::vector<int> report_idx;
  if (model->dim() <= 40) {
    report_idx = all_indices(model->dim());
  } else {
    // hyperparameters only; "max" still scans every coordinate
    for (int i = data.J * data.l; i < model->dim(); ++i) report_idx.push_back(i);
  }
  fill_reported_params(r, *model, diag, report_idx);
  return r;
}

ChainResult run_logreg_chain(const LogRegData& data, bool centered, const SamplerSpec& spec,
                             const ExperimentConfig& cfg, std::uint64_t chain_seed) {
  auto model = std::make_shared<LogRegAlphaModel>(data, centered);
  auto coef_update = make_logreg_coef_update(spec, *model);
  std::shared_ptr<ConditionalUpdate> alpha_update;
  if (centered)
    alpha_update = std::make_shared<ExactConjugateUpdate>();
  else
    alpha_update = std::make_shared<LogScaleRwmUpdate>(0.5);
  std::vector<BlockSpec> blocks(2);
  blocks[0].sites = {1};
  blocks[0].updates = {alpha_update};
  blocks[0].label = "alpha";
  blocks[1].sites = {0};
  blocks[1].updates = {coef_update};
  blocks[1].label = "coef";
  RandomScanKernel kernel(model, blocks);

  Rng rng(chain_seed);
  Telemetry tel;
  const int d = model->coef_dim();
  Eigen::VectorXd x(d + 1);
  x[d] = 1.0;  // prior-scale start; coefficients from their prior at alpha = 1
  double sd0 = 1.0 / std::sqrt(static_cast<double>(d));
  for (int i = 0; i < d; ++i) x[i] = rng.normal(0.0, sd0);

  Eigen::MatrixXd trace(cfg.iters, model->dim());
  for (long it = 0; it < cfg.iters; ++it) {
    kernel.sweep(x, rng, tel);
    trace.row(it) = x;
  }
  TraceDiagnostics diag = diagnose_trace(trace, cfg.burnin);

  ChainResult r;
  r.cost = static_cast<double>(tel.target_evals) / static_cast<double>(cfg.iters);
  std::vector<int> report_idx;
  if (model->dim() <= 40)
    report_idx = all_indices(model->dim());
  else
    report_idx = {d};
  fill_reported_params(r, *model, diag, report_idx);
  return r;
}

double failed_fraction(const std::vector<ChainResult>& rows) {
  if (rows.empty()) return 0.0;
  size_t bad = 0;
  for (const auto& r : rows)
    if (r.failed) ++bad;
  return static_cast<double>(bad) / static_cast<double>(rows.size());
}

void warn_failures(const std::vector<ChainResult>& rows) {
  for (const auto& r : rows)
    if (r.failed)
      std::fprintf(stderr, "warning: %s %s failed: %s\n", r.config_id.c_str(), r.sampler.c_str(),
                   r.error.c_str());
}

double max_param_iat(const ChainResult& r) {
  for (size_t i = r.params.size(); i-- > 0;)
    if (r.params[i] == "max") return r.iat[i];
  throw std::logic_error("chain result has no max row");
}

void plot_max_iat(const std::string& path, const std::vector<ChainResult>& rows,
                  const std::function<double(const ChainResult&)>& x_of,
                  const std::string& xlabel, bool logx, const std::string& title) {
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::vector<double>>> by_series;
  for (const auto& r : rows) {
    if (r.failed) continue;
    std::string label = r.sampler + (r.tag.empty() ? "" : " " + r.tag);
    if (!by_series.count(label)) order.push_back(label);
    by_series[label][x_of(r)].push_back(max_param_iat(r));
  }
  std::vector<SvgSeries> series;
  for (const auto& label : order) {
    SvgSeries s;
    s.label = label;
    for (auto& [xv, vals] : by_series[label]) {
      s.x.push_back(xv);
      s.y.push_back(aggregate_median(vals).median);
    }
    series.push_back(std::move(s));
  }
  SvgPlotOptions opts;
  opts.title = title;
  opts.xlabel = xlabel;
  opts.ylabel = "median max IAT";
  opts.logx = logx;
  opts.logy = true;
  write_svg_lines(path, series, opts);
}

int finish_grid_outputs(const ExperimentConfig& cfg, const std::vector<ChainResult>& rows,
                        const std::function<double(const ChainResult&)>& x_of,
                        const std::string& xlabel, bool logx, const std::string& title) {
  warn_failures(rows);
  write_results_csv(cfg.out + ".csv", rows);
  write_median_csv(cfg.out + "_median.csv", rows);
  if (cfg.plot) plot_max_iat(cfg.out + ".svg", rows, x_of, xlabel, logx, title);
  double ff = failed_fraction(rows);
  if (ff > 0.2) {
    std::fprintf(stderr, "error: %.1f%% of replicate chains failed\n", 100.0 * ff);
    return 4;
  }
  return 0;
}

void check_common_config(const ExperimentConfig& cfg) {
  if (cfg.iters < 20) throw ConfigError("iters must be at least 20");
  if (cfg.reps < 1) throw ConfigError("reps must be positive");
  if (!(cfg.burnin >= 0.0 && cfg.burnin < 1.0)) throw ConfigError("burnin must be in [0,1)");
  if (cfg.samplers.empty()) throw ConfigError("no samplers given");
}

}  // namespace

SamplerSpec parse_sampler_spec(const std::string& s) {
  SamplerSpec spec;
  spec.raw = s;
  std::string base = s;
  auto colon = s.find(':');
  if (colon != std::string::npos) {
    base = s.substr(0, colon);
    std::string suffix = s.substr(colon + 1);
    if (suffix.rfind("k=", 0) != 0)
      throw ConfigError("bad sampler suffix in '" + s + "' (expected :k=<int>)");
    try {
      size_t used = 0;
      int k = std::stoi(suffix.substr(2), &used);
      if (used != suffix.size() - 2 || k < 1) throw std::invalid_argument("k");
      spec.k = k;
    } catch (const std::exception&) {
      throw ConfigError("bad repeat count in sampler '" + s + "'");
    }
  }
  static const char* known[] = {"gibbs-ars", "gibbs-conj",  "mwg-imh",
                                "mwg-rwm",   "mwg-imh-mode", "mwg-barker"};
  bool ok = false;
  for (const char* name : known) ok = ok || base == name;
  if (!ok) throw ConfigError("unknown sampler '" + base + "'");
  spec.base = base;
  return spec;
}

ThreadPool::ThreadPool(unsigned n) {
  if (n == 0) n = 1;
  workers_.reserve(n);
  for (unsigned i = 0; i < n; ++i) workers_.emplace_back([this] { worker(); });
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void ThreadPool::worker() {
  std::unique_lock<std::mutex> lk(mu_);
  for (;;) {
    cv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
    if (queue_.empty()) {
      if (stop_) return;
      continue;
    }
    auto job = std::move(queue_.front());
    queue_.pop_front();
    ++active_;
    lk.unlock();
    job();
    lk.lock();
    --active_;
    if (queue_.empty() && active_ == 0) idle_cv_.notify_all();
  }
}

void ThreadPool::submit(std::function<void()> job) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    queue_.push_back(std::move(job));
  }
  cv_.notify_one();
}

void ThreadPool::wait_idle() {
  std::unique_lock<std::mutex> lk(mu_);
  idle_cv_.wait(lk, [this] { return queue_.empty() && active_ == 0; });
}

long warm_start_sweeps(int J, double kappa) {
  if (J < 1) throw std::invalid_argument("warm_start_sweeps: J must be positive");
  if (!(kappa > 0.0 && kappa <= 1.0))
    throw std::invalid_argument("warm_start_sweeps: kappa must be in (0,1]");
  if (J == 1) return 0;
  double rate = -std::log1p(-0.5 * kappa * kappa);
  return static_cast<long>(std::ceil(std::log(static_cast<double>(J)) / rate));
}

std::shared_ptr<ConditionalUpdate> make_hier_theta_update(const SamplerSpec& spec,
                                                          const HierModel& model) {
  std::shared_ptr<ConditionalUpdate> base;
  if (spec.base == "gibbs-ars") {
    if (model.data().l != 1)
      throw ConfigError("gibbs-ars needs scalar group effects (one covariate)");
    base = std::make_shared<ExactArsUpdate>();
  } else if (spec.base == "gibbs-conj") {
    if (!model.has_site_exact_draw(0))
      throw ConfigError(
          "gibbs-conj needs conjugate group-effect conditionals; the logistic likelihood has "
          "none");
    base = std::make_shared<ExactConjugateUpdate>();
  } else if (spec.base == "mwg-imh") {
    base = std::make_shared<ImhUpdate>(hier_prior_proposal());
  } else if (spec.base == "mwg-imh-mode") {
    base = std::make_shared<ImhAtModeUpdate>();
  } else if (spec.base == "mwg-rwm") {
    base = std::make_shared<RwmUpdate>();
  } else if (spec.base == "mwg-barker") {
    base = std::make_shared<BarkerUpdate>();
  } else {
    throw ConfigError("unknown sampler '" + spec.base + "'");
  }
  return wrap_repeats(std::move(base), spec.k);
}

std::shared_ptr<ConditionalUpdate> make_logreg_coef_update(const SamplerSpec& spec,
                                                           const LogRegAlphaModel& model) {
  std::shared_ptr<ConditionalUpdate> base;
  if (spec.base == "gibbs-ars") {
    if (model.site_dim(0) != 1)
      throw ConfigError("gibbs-ars needs a scalar coefficient block");
    base = std::make_shared<ExactArsUpdate>();
  } else if (spec.base == "gibbs-conj") {
    if (!model.has_site_exact_draw(0))
      throw ConfigError("gibbs-conj needs a conjugate coefficient conditional; none here");
    base = std::make_shared<ExactConjugateUpdate>();
  } else if (spec.base == "mwg-imh") {
    base = std::make_shared<ImhUpdate>(logreg_prior_proposal());
  } else if (spec.base == "mwg-imh-mode") {
    base = std::make_shared<ImhAtModeUpdate>();
  } else if (spec.base == "mwg-rwm") {
    base = std::make_shared<RwmUpdate>();
  } else if (spec.base == "mwg-barker") {
    base = std::make_shared<BarkerUpdate>();
  } else {
    throw ConfigError("unknown sampler '" + spec.base + "'");
  }
  return wrap_repeats(std::move(base), spec.k);
}

Eigen::VectorXd feasible_start_hier(const HierModel& model, ConditionalUpdate& theta_update,
                                    double c, double kappa, Rng& rng, Telemetry& tel) {
  const HierData& data = model.data();
  const int J = data.J, l = data.l;
  Eigen::VectorXd psi_hat(2 * l);
  if (l == 1) {
    HierMle mle = hier_mle(data);
    psi_hat << mle.mu, mle.tau;
  } else {
    // no marginal-likelihood fit with covariates; start from the prior center
    psi_hat.head(l).setZero();
    psi_hat.tail(l).setOnes();
  }

  Eigen::VectorXd psi = psi_hat;
  if (c > 0.0) {
    // uniform in the ball of radius c/sqrt(J) around the estimate
    Eigen::VectorXd dir(2 * l);
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
    double norm = dir.norm();
    if (norm > 0.0) dir /= norm;
    double radius = (c / std::sqrt(static_cast<double>(J))) *
                    std::pow(rng.uniform(), 1.0 / static_cast<double>(2 * l));
    psi += radius * dir;
  }
  for (int k = 0; k < l; ++k) psi[l + k] = std::max(psi[l + k], 1e-3);

  Eigen::VectorXd x(model.dim());
  for (int k = 0; k < l; ++k) {
    double mu_hat = psi_hat[k];
    double tau_hat = std::max(psi_hat[l + k], 1e-3);
    double half = 3.0 / std::sqrt(tau_hat);
    for (int j = 0; j < J; ++j) x[j * l + k] = rng.uniform(mu_hat - half, mu_hat + half);
  }
  model.set_site_value(model.psi_site(), x, psi);

  long sweeps = warm_start_sweeps(J, kappa);
  for (long it = 0; it < sweeps; ++it) {
    VisitCache cache;
    for (int j = 0; j < J; ++j) theta_update.apply(model, j, x, rng, tel, &cache);
  }
  return x;
}

std::vector<ChainResult> run_hier_grid(const ExperimentConfig& cfg, bool covariate_mode) {
  check_common_config(cfg);
  struct GridPoint {
    int J, m, l;
  };
  std::vector<GridPoint> grid;
  if (covariate_mode) {
    for (int J : cfg.groups)
      for (int l : cfg.covariates) {
        if (J < 2 || l < 1) throw ConfigError("bad grid point");
        grid.push_back({J, cfg.obs_per_group, l});
      }
  } else {
    for (int J : cfg.groups) {
      if (J < 2) throw ConfigError("need at least 2 groups");
      grid.push_back({J, cfg.obs_per_group, 1});
    }
  }
  if (grid.empty()) throw ConfigError("empty grid");
  if (cfg.obs_per_group < 1) throw ConfigError("obs-per-group must be positive");

  std::vector<SamplerSpec> specs;
  for (const auto& s : cfg.samplers) specs.push_back(parse_sampler_spec(s));

  // surface sampler/model incompatibilities before spawning work
  {
    Rng probe_rng(0);
    std::vector<int> seen;
    for (const auto& gp : grid) {
      if (std::find(seen.begin(), seen.end(), gp.l) != seen.end()) continue;
      seen.push_back(gp.l);
      HierData probe = generate_hier_dataset(2, 2, gp.l, 1.0, 1.0, probe_rng);
      HierModel model(probe);
      for (const auto& spec : specs) make_hier_theta_update(spec, model);
    }
  }

  const size_t n_specs = specs.size();
  std::vector<ChainResult> results(grid.size() * static_cast<size_t>(cfg.reps) * n_specs);
  ThreadPool pool(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                  : std::thread::hardware_concurrency());
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    const GridPoint gp = grid[gi];
    std::string grid_id = "J" + std::to_string(gp.J) + ":m" + std::to_string(gp.m) + ":l" +
                          std::to_string(gp.l);
    for (int rep = 0; rep < cfg.reps; ++rep) {
      for (size_t si = 0; si < n_specs; ++si) {
        size_t slot = (gi * static_cast<size_t>(cfg.reps) + static_cast<size_t>(rep)) * n_specs + si;
        pool.submit([&cfg, &specs, &results, gp, gi, rep, si, slot, grid_id, covariate_mode] {
          ChainResult& out = results[slot];
          out.grid_id = grid_id;
          out.config_id = grid_id + ":rep" + std::to_string(rep);
          out.sampler = specs[si].raw;
          out.J = gp.J;
          out.l = gp.l;
          out.rep = rep;
          try {
            // the dataset substream ignores the sampler index so every sampler
            // sees the same data (paired comparisons)
            Rng data_rng(cfg.seed, {kDataStream, gi, static_cast<std::uint64_t>(rep)});
            HierData data;
            if (covariate_mode) {
              // covariate study replication protocol: per-dataset group-level
              // means Unif[-1,1], population precision 0.5 on every coordinate
              Eigen::VectorXd mu_star(gp.l);
              for (int k = 0; k < gp.l; ++k) mu_star[k] = data_rng.uniform(-1.0, 1.0);
              Eigen::VectorXd tau_star = Eigen::VectorXd::Constant(gp.l, 0.5);
              data = generate_hier_dataset(gp.J, gp.m, gp.l, mu_star, tau_star, data_rng);
            } else {
              data = generate_hier_dataset(gp.J, gp.m, gp.l, 1.0, 1.0, data_rng);
            }
            std::uint64_t chain_seed =
                derive_seed(cfg.seed, {kChainStream, gi, static_cast<std::uint64_t>(rep), si});
            ChainResult run = run_hier_chain(data, specs[si], cfg, chain_seed);
            out.params = std::move(run.params);
            out.iat = std::move(run.iat);
            out.ess = std::move(run.ess);
            out.cost = run.cost;
          } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
          }
        });
      }
    }
  }
  pool.wait_idle();
  return results;
}

std::vector<ChainResult> run_logreg_grid(const ExperimentConfig& cfg) {
  check_common_config(cfg);
  struct GridPoint {
    int d, n;
    bool centered;
  };
  std::vector<GridPoint> grid;
  for (int d : cfg.dims) {
    if (d < 2 || d % 2 != 0) throw ConfigError("dims must be even and at least 2 (n = d/2)");
    grid.push_back({d, d / 2, true});
    grid.push_back({d, d / 2, false});
  }
  if (grid.empty()) throw ConfigError("empty grid");

  std::vector<SamplerSpec> specs;
  for (const auto& s : cfg.samplers) specs.push_back(parse_sampler_spec(s));

  {
    Rng probe_rng(0);
    for (const auto& gp : grid) {
      LogRegData probe = generate_logreg_dataset(2, gp.d, 1.0, probe_rng);
      LogRegAlphaModel model(probe, gp.centered);
      for (const auto& spec : specs) make_logreg_coef_update(spec, model);
    }
  }

  const size_t n_specs = specs.size();
  std::vector<ChainResult> results(grid.size() * static_cast<size_t>(cfg.reps) * n_specs);
  ThreadPool pool(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                  : std::thread::hardware_concurrency());
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    const GridPoint gp = grid[gi];
    std::string tag = gp.centered ? "centered" : "noncentered";
    std::string grid_id = "d" + std::to_string(gp.d) + ":n" + std::to_string(gp.n) + ":" + tag;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      for (size_t si = 0; si < n_specs; ++si) {
        size_t slot = (gi * static_cast<size_t>(cfg.reps) + static_cast<size_t>(rep)) * n_specs + si;
        pool.submit([&cfg, &specs, &results, gp, rep, si, slot, grid_id, tag] {
          ChainResult& out = results[slot];
          out.grid_id = grid_id;
          out.config_id = grid_id + ":rep" + std::to_string(rep);
          out.sampler = specs[si].raw;
          out.tag = tag;
          out.J = gp.d;
          out.l = gp.n;
          out.rep = rep;
          try {
            // both parameterizations and all samplers share the dataset for a
            // given (d, rep)
            Rng data_rng(cfg.seed,
                         {kDataStream, static_cast<std::uint64_t>(gp.d),
                          static_cast<std::uint64_t>(rep)});
            LogRegData data = generate_logreg_dataset(gp.n, gp.d, 1.0, data_rng);
            std::uint64_t chain_seed =
                derive_seed(cfg.seed, {kChainStream, static_cast<std::uint64_t>(gp.d),
                                       static_cast<std::uint64_t>(rep), si,
                                       gp.centered ? 1ULL : 0ULL});
            ChainResult run = run_logreg_chain(data, gp.centered, specs[si], cfg, chain_seed);
            out.params = std::move(run.params);
            out.iat = std::move(run.iat);
            out.ess = std::move(run.ess);
            out.cost = run.cost;
          } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
          }
        });
      }
    }
  }
  pool.wait_idle();
  return results;
}

DiffusionRunSummary run_diffusion_chain(const ExperimentConfig& cfg, int n_obs) {
  if (n_obs < 2) throw ConfigError("need at least 2 observation times");
  if (cfg.bridge_points < 2) throw ConfigError("bridge resolution R must be at least 2");
  if (!(cfg.horizon > 0.0)) throw ConfigError("horizon T must be positive");
  if (cfg.iters < 20) throw ConfigError("iters must be at least 20");
  DriftFamily drift;
  if (cfg.drift == "sine")
    drift = sine_drift();
  else if (cfg.drift == "ou")
    drift = ou_drift();
  else
    throw ConfigError("unknown drift '" + cfg.drift + "' (expected sine or ou)");

  // data simulated on a fine grid of about 4096 steps regardless of n_obs
  Rng data_rng(cfg.seed, {kDiffusionDataStream, static_cast<std::uint64_t>(n_obs)});
  int fine_per_obs = std::max(2, static_cast<int>(std::llround(4096.0 / (n_obs - 1))));
  DiffusionData data =
      simulate_diffusion_em(drift, cfg.theta_true, 0.0, cfg.horizon, n_obs, fine_per_obs, data_rng);

  DiffusionDaSampler sampler(data, drift, cfg.bridge_points, 0.0, 1.0, 0.0, 2.0);
  Rng rng(cfg.seed, {kDiffusionChainStream, static_cast<std::uint64_t>(n_obs)});
  sampler.init_path(rng);

  Eigen::VectorXd trace(cfg.iters);
  for (long it = 0; it < cfg.iters; ++it) {
    sampler.sweep(rng);
    trace[it] = sampler.theta();
  }
  long drop = static_cast<long>(std::floor(cfg.burnin * static_cast<double>(cfg.iters)));
  Eigen::VectorXd tail = trace.tail(cfg.iters - drop);

  DiffusionRunSummary s;
  s.n_obs = n_obs;
  s.bridge_acceptance = sampler.bridge_acceptance();
  s.theta_mean = tail.mean();
  s.theta_sd = std::sqrt((tail.array() - s.theta_mean).square().sum() /
                         static_cast<double>(std::max<long>(1, tail.size() - 1)));
  IatEstimate e = geyer_iat(tail);
  s.theta_iat = e.defined ? e.iat : static_cast<double>(tail.size());
  s.theta_trace = std::move(trace);
  return s;
}

void write_results_csv(const std::string& path, const std::vector<ChainResult>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "config_id,sampler,J,l,param,iat,ess,cost,iat_x_cost\n";
  out.precision(10);
  for (const auto& r : rows) {
    if (r.failed) continue;
    for (size_t i = 0; i < r.params.size(); ++i)
      out << r.config_id << ',' << r.sampler << ',' << r.J << ',' << r.l << ',' << r.params[i]
          << ',' << r.iat[i] << ',' << r.ess[i] << ',' << r.cost << ',' << r.iat[i] * r.cost
          << '\n';
  }
}

void write_median_csv(const std::string& path, const std::vector<ChainResult>& rows) {
  struct Cell {
    int J = 0, l = 0;
    std::vector<double> iat, ess, cost, iat_cost;
  };
  std::vector<std::string> order;
  std::map<std::string, Cell> cells;
  auto key_of = [](const ChainResult& r, const std::string& param) {
    return r.grid_id + "\x1f" + r.sampler + "\x1f" + param;
  };
  for (const auto& r : rows) {
    if (r.failed) continue;
    for (size_t i = 0; i < r.params.size(); ++i) {
      std::string key = key_of(r, r.params[i]);
      if (!cells.count(key)) order.push_back(key);
      Cell& c = cells[key];
      c.J = r.J;
      c.l = r.l;
      c.iat.push_back(r.iat[i]);
      c.ess.push_back(r.ess[i]);
      c.cost.push_back(r.cost);
      c.iat_cost.push_back(r.iat[i] * r.cost);
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "grid_id,sampler,J,l,param,reps,iat_q1,iat_median,iat_q3,ess_median,cost_median,"
         "iat_x_cost_median\n";
  out.precision(10);
  for (const auto& key : order) {
    const Cell& c = cells[key];
    size_t p1 = key.find('\x1f');
    size_t p2 = key.find('\x1f', p1 + 1);
    AggregateSummary iat = aggregate_median(c.iat);
    AggregateSummary ess = aggregate_median(c.ess);
    AggregateSummary cost = aggregate_median(c.cost);
    AggregateSummary ic = aggregate_median(c.iat_cost);
    out << key.substr(0, p1) << ',' << key.substr(p1 + 1, p2 - p1 - 1) << ',' << c.J << ',' << c.l
        << ',' << key.substr(p2 + 1) << ',' << iat.n << ',' << iat.q1 << ',' << iat.median << ','
        << iat.q3 << ',' << ess.median << ',' << cost.median << ',' << ic.median << '\n';
  }
}

int hier_experiment_main(ExperimentConfig cfg, bool covariate_mode) {
  if (cfg.full_scale) {
    cfg.iters = std::max<long>(cfg.iters, 100000);
    cfg.reps = std::max(cfg.reps, 50);
    if (!covariate_mode && cfg.groups == std::vector<int>{128, 256, 512, 1024})
      cfg.groups = {128, 256, 512, 1024, 2048, 4096, 8192};
  }
  auto rows = run_hier_grid(cfg, covariate_mode);
  auto x_of = [covariate_mode](const ChainResult& r) {
    return static_cast<double>(covariate_mode ? r.l : r.J);
  };
  return finish_grid_outputs(cfg, rows, x_of, covariate_mode ? "covariates l" : "groups J",
                             !covariate_mode,
                             covariate_mode ? "mixing vs covariate count" : "mixing vs group count");
}

int logreg_experiment_main(ExperimentConfig cfg) {
  if (cfg.full_scale) {
    cfg.iters = std::max<long>(cfg.iters, 20000);
    cfg.reps = std::max(cfg.reps, 20);
    if (cfg.dims == std::vector<int>{20, 60}) cfg.dims = {20, 60, 100, 200};
  }
  auto rows = run_logreg_grid(cfg);
  auto x_of = [](const ChainResult& r) { return static_cast<double>(r.J); };
  return finish_grid_outputs(cfg, rows, x_of, "dimension d", false,
                             "mixing vs dimension, centered and non-centered");
}

int diffusion_experiment_main(ExperimentConfig cfg) {
  if (cfg.full_scale) {
    cfg.iters = std::max<long>(cfg.iters, 100000);
    if (cfg.n_obs == std::vector<int>{4, 8, 16, 32, 64}) cfg.n_obs = {4, 8, 16, 32, 64, 128, 256};
  }
  if (cfg.n_obs.empty()) throw ConfigError("no observation counts given");
  std::vector<DiffusionRunSummary> runs;
  for (int N : cfg.n_obs) runs.push_back(run_diffusion_chain(cfg, N));

  for (const auto& run : runs) {
    std::string path = cfg.out + "_theta_N" + std::to_string(run.n_obs) + ".csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "iter,theta\n";
    out.precision(10);
    for (Eigen::Index i = 0; i < run.theta_trace.size(); ++i)
      out << i << ',' << run.theta_trace[i] << '\n';
  }
  {
    std::string path = cfg.out + "_acceptance.csv";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "N,R,segments,bridge_acceptance,theta_mean,theta_sd,theta_iat\n";
    out.precision(10);
    for (const auto& run : runs)
      out << run.n_obs << ',' << cfg.bridge_points << ',' << run.n_obs - 1 << ','
          << run.bridge_acceptance << ',' << run.theta_mean << ',' << run.theta_sd << ','
          << run.theta_iat << '\n';
  }
  if (cfg.plot) {
    SvgSeries s;
    s.label = cfg.drift + " drift";
    for (const auto& run : runs) {
      s.x.push_back(static_cast<double>(run.n_obs));
      s.y.push_back(run.bridge_acceptance);
    }
    SvgPlotOptions opts;
    opts.title = "bridge acceptance vs observation count";
    opts.xlabel = "observations N";
    opts.ylabel = "acceptance rate";
    opts.logx = true;
    write_svg_lines(cfg.out + ".svg", {s}, opts);
  }
  return 0;
}

}  // namespace cwmc

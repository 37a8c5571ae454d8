#include "cwmc/hier_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cwmc/mathutil.hpp"

namespace cwmc {

void HierData::refresh_counts() {
  counts.resize(J);
  for (int j = 0; j < J; ++j) counts[j] = static_cast<int>(std::lround(y.row(j).sum()));
}

HierData generate_hier_dataset(int J, int m, int l, const Eigen::VectorXd& mu_star,
                               const Eigen::VectorXd& tau_star, Rng& rng,
                               bool per_group_covariates) {
  if (J < 1 || m < 0 || l < 1) throw std::invalid_argument("generate_hier_dataset: bad sizes");
  if (mu_star.size() != l || tau_star.size() != l)
    throw std::invalid_argument("generate_hier_dataset: parameter length != l");
  if (!(tau_star.minCoeff() > 0.0)) throw std::invalid_argument("generate_hier_dataset: tau_star <= 0");
  HierData d;
  d.J = J;
  d.m = m;
  d.l = l;
  d.shared_x = !per_group_covariates;
  int n_mats = d.shared_x ? 1 : J;
  d.X.resize(n_mats);
  for (int g = 0; g < n_mats; ++g) {
    d.X[g].resize(m, l);
    d.X[g].col(0).setOnes();
    for (int i = 0; i < m; ++i)
      for (int k = 1; k < l; ++k) d.X[g](i, k) = rng.uniform(-5.0, 5.0);
  }
  Eigen::VectorXd sd = tau_star.cwiseSqrt().cwiseInverse();
  d.y.resize(J, m);
  for (int j = 0; j < J; ++j) {
    Eigen::VectorXd theta(l);
    for (int k = 0; k < l; ++k) theta[k] = rng.normal(mu_star[k], sd[k]);
    const Eigen::MatrixXd& X = d.X_of(j);
    for (int i = 0; i < m; ++i) {
      double p = sigmoid(X.row(i).dot(theta));
      d.y(j, i) = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
  d.refresh_counts();
  return d;
}

HierData generate_hier_dataset(int J, int m, int l, double mu_star, double tau_star, Rng& rng,
                               bool per_group_covariates) {
  return generate_hier_dataset(J, m, l, Eigen::VectorXd::Constant(std::max(l, 1), mu_star),
                               Eigen::VectorXd::Constant(std::max(l, 1), tau_star), rng,
                               per_group_covariates);
}

void write_hier_dataset_csv(const HierData& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_hier_dataset_csv: cannot open " + path);
  out << "group,obs_index,y";
  for (int k = 1; k <= data.l; ++k) out << ",x_" << k;
  out << "\n";
  out.precision(17);
  for (int j = 0; j < data.J; ++j) {
    const Eigen::MatrixXd& X = data.X_of(j);
    for (int i = 0; i < data.m; ++i) {
      out << j << "," << i << "," << static_cast<int>(data.y(j, i));
      for (int k = 0; k < data.l; ++k) out << "," << X(i, k);
      out << "\n";
    }
  }
}

HierData read_hier_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_hier_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_hier_dataset_csv: empty file");
  int l = 0;
  {
    std::stringstream ss(line);
    std::string field;
    int n_fields = 0;
    while (std::getline(ss, field, ',')) ++n_fields;
    l = n_fields - 3;
  }
  if (l < 1) throw std::runtime_error("read_hier_dataset_csv: bad header");
  struct Row {
    int j, i;
    double y;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  int max_j = -1, max_i = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    Row r;
    std::getline(ss, field, ',');
    r.j = std::stoi(field);
    std::getline(ss, field, ',');
    r.i = std::stoi(field);
    std::getline(ss, field, ',');
    r.y = std::stod(field);
    for (int k = 0; k < l; ++k) {
      if (!std::getline(ss, field, ','))
        throw std::runtime_error("read_hier_dataset_csv: short row");
      r.x.push_back(std::stod(field));
    }
    max_j = std::max(max_j, r.j);
    max_i = std::max(max_i, r.i);
    rows.push_back(std::move(r));
  }
  HierData d;
  d.J = max_j + 1;
  d.m = max_i + 1;
  d.l = l;
  d.shared_x = false;
  d.X.assign(d.J, Eigen::MatrixXd::Zero(d.m, l));
  d.y.setZero(d.J, d.m);
  if (static_cast<long>(rows.size()) != static_cast<long>(d.J) * d.m)
    throw std::runtime_error("read_hier_dataset_csv: missing rows");
  for (const Row& r : rows) {
    d.y(r.j, r.i) = r.y;
    for (int k = 0; k < l; ++k) d.X[static_cast<size_t>(r.j)](r.i, k) = r.x[static_cast<size_t>(k)];
  }
  bool all_equal = true;
  for (int j = 1; j < d.J && all_equal; ++j)
    if ((d.X[static_cast<size_t>(j)] - d.X[0]).lpNorm<Eigen::Infinity>() != 0.0) all_equal = false;
  if (all_equal) {
    d.shared_x = true;
    d.X.resize(1);
  }
  d.refresh_counts();
  return d;
}

HierModel::HierModel(HierData data, NormalGammaPrior prior)
    : data_(std::move(data)), prior_(prior) {
  if (data_.J < 1) throw std::invalid_argument("HierModel: need at least one group");
  if (data_.counts.size() != data_.J) data_.refresh_counts();
  lam_max_.resize(data_.X.size());
  for (size_t g = 0; g < data_.X.size(); ++g) {
    const Eigen::MatrixXd& X = data_.X[g];
    if (X.cols() != data_.l || X.rows() != data_.m)
      throw std::invalid_argument("HierModel: covariate matrix shape mismatch");
    if (data_.m == 0) {
      lam_max_[g] = 0.0;
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X.transpose() * X);
      lam_max_[g] = es.eigenvalues().maxCoeff();
    }
  }
}

int HierModel::site_offset(int s) const {
  if (s < 0 || s > data_.J) throw std::out_of_range("HierModel: bad site");
  return s * data_.l;
}

int HierModel::site_dim(int s) const {
  if (s < 0 || s > data_.J) throw std::out_of_range("HierModel: bad site");
  return s == data_.J ? 2 * data_.l : data_.l;
}

Eigen::VectorXd HierModel::mu_of(const Eigen::VectorXd& x) const {
  return x.segment(data_.J * data_.l, data_.l);
}

Eigen::VectorXd HierModel::tau_of(const Eigen::VectorXd& x) const {
  return x.segment(data_.J * data_.l + data_.l, data_.l);
}

double HierModel::site_logpdf(int s, const Eigen::VectorXd& x, const Eigen::VectorXd& v,
                              Eigen::VectorXd* grad, Telemetry* tel) const {
  if (tel) {
    tel->target_evals += 1;
    if (grad) tel->gradient_evals += 1;
  }
  const int l = data_.l;
  if (s == data_.J) {
    // psi | theta: independent NormalGamma posteriors per coordinate
    if (v.size() != 2 * l) throw std::invalid_argument("HierModel: bad psi value size");
    double total = 0.0;
    if (grad) throw std::logic_error("HierModel: psi gradient not implemented");
    for (int k = 0; k < l; ++k) {
      double sum = 0.0, sumsq = 0.0;
      for (int j = 0; j < data_.J; ++j) {
        double t = x[j * l + k];
        sum += t;
        sumsq += t * t;
      }
      auto post = normal_gamma_update(prior_, data_.J, sum, sumsq);
      total += normal_gamma_logpdf(post, v[k], v[l + k]);
    }
    return total;
  }
  if (v.size() != l) throw std::invalid_argument("HierModel: bad theta value size");
  Eigen::VectorXd mu = mu_of(x), tau = tau_of(x);
  double lp = 0.0;
  if (grad) grad->setZero(l);
  if (l == 1) {
    double t = v[0];
    lp = data_.counts[s] * t - data_.m * log1pexp(t);
    if (grad) (*grad)[0] = data_.counts[s] - data_.m * sigmoid(t);
  } else {
    const Eigen::MatrixXd& X = data_.X_of(s);
    for (int i = 0; i < data_.m; ++i) {
      double eta = X.row(i).dot(v);
      lp += data_.y(s, i) * eta - log1pexp(eta);
      if (grad) grad->noalias() += (data_.y(s, i) - sigmoid(eta)) * X.row(i).transpose();
    }
  }
  for (int k = 0; k < l; ++k) {
    double diff = v[k] - mu[k];
    lp -= 0.5 * tau[k] * diff * diff;
    if (grad) (*grad)[k] -= tau[k] * diff;
  }
  return lp;
}

bool HierModel::site_in_domain(int s, const Eigen::VectorXd& v) const {
  if (s != data_.J) return true;
  for (int k = 0; k < data_.l; ++k)
    if (!(v[data_.l + k] > 0.0)) return false;
  return true;
}

SiteCertificates HierModel::site_certificates(int s, const Eigen::VectorXd& x) const {
  if (s == data_.J) return {};
  Eigen::VectorXd tau = tau_of(x);
  double tmin = tau.minCoeff(), tmax = tau.maxCoeff();
  if (!(tmin > 0.0)) return {};
  size_t g = data_.shared_x ? 0 : static_cast<size_t>(s);
  return {true, tmin, tmax + 0.25 * lam_max_[g]};
}

Eigen::MatrixXd HierModel::site_hessian(int s, const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& v) const {
  if (s >= data_.J) throw std::logic_error("HierModel: no Hessian for psi site");
  const int l = data_.l;
  Eigen::MatrixXd H = tau_of(x).asDiagonal();
  if (l == 1) {
    double p = sigmoid(v[0]);
    H(0, 0) += data_.m * p * (1.0 - p);
  } else {
    const Eigen::MatrixXd& X = data_.X_of(s);
    for (int i = 0; i < data_.m; ++i) {
      double p = sigmoid(X.row(i).dot(v));
      H.noalias() += p * (1.0 - p) * X.row(i).transpose() * X.row(i);
    }
  }
  return H;
}

void HierModel::site_exact_draw(int s, Eigen::VectorXd& x, Rng& rng, Telemetry* tel) const {
  if (s != data_.J) throw std::logic_error("HierModel: only the psi site is conjugate");
  const int l = data_.l;
  for (int k = 0; k < l; ++k) {
    double sum = 0.0, sumsq = 0.0;
    for (int j = 0; j < data_.J; ++j) {
      double t = x[j * l + k];
      sum += t;
      sumsq += t * t;
    }
    auto post = normal_gamma_update(prior_, data_.J, sum, sumsq);
    double mu, tau;
    normal_gamma_draw(post, rng, &mu, &tau);
    x[data_.J * l + k] = mu;
    x[data_.J * l + l + k] = tau;
    if (tel) tel->exact_draws += 1;
  }
}

Eigen::VectorXd HierModel::site_search_origin(int s, const Eigen::VectorXd& x) const {
  if (s == data_.J) return site_value(s, x);
  return mu_of(x);
}

std::uint64_t HierModel::site_signature(int s, const Eigen::VectorXd& x) const {
  (void)x;
  if (s == data_.J || data_.l != 1) return 0;
  return 1 + static_cast<std::uint64_t>(data_.counts[s]);
}

std::string HierModel::param_name(int index) const {
  const int l = data_.l;
  if (index < data_.J * l) {
    int j = index / l, k = index % l;
    if (l == 1) return "theta_" + std::to_string(j + 1);
    return "theta_" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
  }
  int rest = index - data_.J * l;
  if (rest < l) return l == 1 ? "mu" : "mu_" + std::to_string(rest + 1);
  rest -= l;
  return l == 1 ? "tau" : "tau_" + std::to_string(rest + 1);
}

namespace {

struct GroupIntegrand {
  int c, m;
  double mu, tau;

  double log_f(double t) const {
    return c * t - m * log1pexp(t) + normal_logpdf(t, mu, 1.0 / std::sqrt(tau));
  }

  // mode of log_f by Newton with analytic derivatives
  double mode() const {
    double t = mu;
    if (m > 0) {
      double p = (c + 0.5) / (m + 1.0);
      t = 0.5 * (mu + std::log(p / (1.0 - p)));
    }
    for (int it = 0; it < 100; ++it) {
      double sg = sigmoid(t);
      double g = c - m * sg - tau * (t - mu);
      double hpp = -m * sg * (1.0 - sg) - tau;
      double step = -g / hpp;
      t += step;
      if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(t))) break;
    }
    return t;
  }

  double curvature(double t) const {
    double sg = sigmoid(t);
    return m * sg * (1.0 - sg) + tau;
  }
};

}  // namespace

double log_marginal_group_gh(int count, int m, double mu, double tau, const GaussHermite& gh) {
  if (m == 0) return 0.0;
  GroupIntegrand gi{count, m, mu, tau};
  double center = gi.mode();
  double scale = 1.0 / std::sqrt(gi.curvature(center));
  return log_integral_gauss_hermite([&](double t) { return gi.log_f(t); }, center, scale, gh);
}

double log_marginal_likelihood_psi(const HierData& data, double mu, double tau, double tol) {
  if (data.l != 1)
    throw std::invalid_argument("log_marginal_likelihood_psi: only l = 1 is supported");
  if (!(tau > 0.0)) throw std::invalid_argument("log_marginal_likelihood_psi: tau <= 0");
  if (data.m == 0) return 0.0;
  double total = 0.0;
  double sd = 1.0 / std::sqrt(tau);
  for (int j = 0; j < data.J; ++j) {
    GroupIntegrand gi{data.counts[j], data.m, mu, tau};
    double center = gi.mode();
    double lo = std::min(center, mu) - 12.0 * sd - 2.0;
    double hi = std::max(center, mu) + 12.0 * sd + 2.0;
    double shift = gi.log_f(center);
    double integral = adaptive_simpson([&](double t) { return std::exp(gi.log_f(t) - shift); },
                                       lo, hi, tol);
    total += shift + std::log(integral);
  }
  return total;
}

namespace {

double neg_profile_loglik(const HierData& data, double mu, double log_tau,
                          const GaussHermite& gh) {
  double tau = std::exp(log_tau);
  std::map<int, double> per_count;
  double total = 0.0;
  for (int j = 0; j < data.J; ++j) {
    int c = data.counts[j];
    auto it = per_count.find(c);
    if (it == per_count.end())
      it = per_count.emplace(c, log_marginal_group_gh(c, data.m, mu, tau, gh)).first;
    total += it->second;
  }
  return -total;
}

HierMle hier_mom(const HierData& data) {
  HierMle r;
  r.used_fallback = true;
  Eigen::VectorXd z(data.J);
  for (int j = 0; j < data.J; ++j) {
    double p = (data.counts[j] + 0.5) / (data.m + 1.0);
    z[j] = std::log(p / (1.0 - p));
  }
  r.mu = z.mean();
  double var = (z.array() - r.mu).square().sum() / std::max(1, data.J - 1);
  r.tau = std::clamp(1.0 / std::max(var, 1e-2), 1e-3, 1e3);
  return r;
}

}  // namespace

HierMle hier_mle(const HierData& data) {
  if (data.l != 1) throw std::invalid_argument("hier_mle: only l = 1 is supported");
  const GaussHermite& gh = gauss_hermite_128();
  HierMle start = hier_mom(data);
  auto f = [&](const Eigen::Vector2d& p) { return neg_profile_loglik(data, p[0], p[1], gh); };

  // Nelder-Mead on (mu, log tau)
  std::array<Eigen::Vector2d, 3> simplex;
  simplex[0] = Eigen::Vector2d(start.mu, std::log(start.tau));
  simplex[1] = simplex[0] + Eigen::Vector2d(0.5, 0.0);
  simplex[2] = simplex[0] + Eigen::Vector2d(0.0, 0.5);
  std::array<double, 3> fv;
  bool finite_ok = true;
  for (int i = 0; i < 3; ++i) {
    fv[static_cast<size_t>(i)] = f(simplex[static_cast<size_t>(i)]);
    if (!std::isfinite(fv[static_cast<size_t>(i)])) finite_ok = false;
  }
  if (!finite_ok) {
    std::fprintf(stderr, "warning: marginal likelihood not finite at start, using method of moments\n");
    return hier_mom(data);
  }
  int evals = 0;
  const int max_evals = 600;
  while (evals < max_evals) {
    std::array<int, 3> ord = {0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
      return fv[static_cast<size_t>(a)] < fv[static_cast<size_t>(b)];
    });
    Eigen::Vector2d& best = simplex[static_cast<size_t>(ord[0])];
    Eigen::Vector2d& worst = simplex[static_cast<size_t>(ord[2])];
    double f_best = fv[static_cast<size_t>(ord[0])];
    double f_second = fv[static_cast<size_t>(ord[1])];
    double& f_worst = fv[static_cast<size_t>(ord[2])];
    double spread = (simplex[1] - simplex[0]).norm() + (simplex[2] - simplex[0]).norm();
    if (spread < 1e-10 || f_worst - f_best < 1e-12) {
      HierMle r;
      r.mu = best[0];
      r.tau = std::exp(best[1]);
      r.converged = true;
      return r;
    }
    Eigen::Vector2d centroid =
        0.5 * (simplex[static_cast<size_t>(ord[0])] + simplex[static_cast<size_t>(ord[1])]);
    Eigen::Vector2d refl = centroid + (centroid - worst);
    double f_refl = f(refl);
    ++evals;
    if (f_refl < f_best) {
      Eigen::Vector2d expand = centroid + 2.0 * (centroid - worst);
      double f_exp = f(expand);
      ++evals;
      if (f_exp < f_refl) {
        worst = expand;
        f_worst = f_exp;
      } else {
        worst = refl;
        f_worst = f_refl;
      }
    } else if (f_refl < f_second) {
      worst = refl;
      f_worst = f_refl;
    } else {
      Eigen::Vector2d contract = centroid + 0.5 * (worst - centroid);
      double f_con = f(contract);
      ++evals;
      if (f_con < f_worst) {
        worst = contract;
        f_worst = f_con;
      } else {
        for (int i : {ord[1], ord[2]}) {
          simplex[static_cast<size_t>(i)] = best + 0.5 * (simplex[static_cast<size_t>(i)] - best);
          fv[static_cast<size_t>(i)] = f(simplex[static_cast<size_t>(i)]);
          ++evals;
        }
      }
    }
  }
  std::fprintf(stderr, "warning: marginal likelihood optimizer did not converge, using method of moments\n");
  return hier_mom(data);
}

}  // namespace cwmc

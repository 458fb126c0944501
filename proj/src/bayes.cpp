#include "rmfem/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "rmfem/random.hpp"
#include "rmfem/summation.hpp"

namespace rmfem::bayes {

namespace {
constexpr double kPi = std::numbers::pi;
}

KLPrior::KLPrior(int dim, double alpha_exp, std::vector<KLMode> modes)
    : dim_(dim), alpha_(alpha_exp), modes_(std::move(modes)) {
  if (dim != 1 && dim != 2) throw InvalidArgument("prior dimension must be 1 or 2");
  if (!(alpha_exp > 0.5 * dim)) throw InvalidArgument("covariance exponent must exceed dim/2");
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (!(modes_[i].lambda > 0.0)) throw InvalidArgument("KL eigenvalues must be positive");
    if (i > 0 && modes_[i].lambda > modes_[i - 1].lambda) throw InvalidArgument("KL eigenvalues must decrease");
  }
}

double KLPrior::eigenfunction(int i, Point x) const {
  const KLMode& m = modes_.at(i);
  if (dim_ == 1) return std::numbers::sqrt2 * std::sin(m.j * kPi * x.x);
  return 2.0 * std::sin(m.j * kPi * x.x) * std::sin(m.k * kPi * x.y);
}

double KLPrior::theta(std::span<const double> xi, Point x) const {
  if (xi.size() != modes_.size()) throw InvalidArgument("coefficient vector length differs from N_KL");
  double t = 0.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) t += std::sqrt(modes_[i].lambda) * eigenfunction(i, x) * xi[i];
  return t;
}

double KLPrior::variance(Point x) const {
  double v = 0.0;
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const double phi = eigenfunction(i, x);
    v += modes_[i].lambda * phi * phi;
  }
  return v;
}

KLPrior prior_spectrum(int dim, double alpha_exp, int n_kl) {
  if (dim != 1 && dim != 2) throw InvalidArgument("prior dimension must be 1 or 2");
  if (!(alpha_exp > 0.5 * dim)) throw InvalidArgument("covariance exponent must exceed dim/2");
  if (n_kl < 1) throw InvalidArgument("N_KL must be positive");
  std::vector<KLMode> modes;
  if (dim == 1) {
    for (int i = 1; i <= n_kl; ++i) modes.push_back({std::pow(i * kPi, -2.0 * alpha_exp), i, 0});
    return KLPrior(1, alpha_exp, std::move(modes));
  }
  // (1,1)..(n_kl,1) already give n_kl modes with j^2 + k^2 <= n_kl^2 + 1, so j, k <= n_kl suffices.
  const int side = n_kl;
  std::vector<std::tuple<int, int, int>> cand;
  for (int j = 1; j <= side; ++j)
    for (int k = 1; k <= side; ++k) cand.emplace_back(j * j + k * k, j, k);
  std::sort(cand.begin(), cand.end());
  for (int i = 0; i < n_kl; ++i) {
    const auto [s, j, k] = cand[i];
    modes.push_back({std::pow(kPi * kPi * s, -alpha_exp), j, k});
  }
  return KLPrior(2, alpha_exp, std::move(modes));
}

ScalarFunction kl_to_field(std::span<const double> xi, const KLPrior& prior) {
  if (xi.size() != static_cast<std::size_t>(prior.n_kl()))
    throw InvalidArgument("coefficient vector length differs from N_KL");
  std::vector<double> c(xi.begin(), xi.end());
  return [c = std::move(c), prior](Point x) { return prior.theta(c, x); };
}

double conductivity(double theta) { return std::exp(std::clamp(theta, -20.0, 20.0)); }

void ObservationSet::validate() const {
  if (points.size() != values.size() || points.size() != noise_var.size())
    throw InvalidArgument("observation points, values and variances differ in length");
  for (double v : noise_var)
    if (!(v > 0.0)) throw InvalidArgument("noise variances must be positive");
}

ForwardModel::ForwardModel(MeshPtr mesh, const KLPrior& prior, const ScalarFunction& f,
                           std::span<const Point> points)
    : mesh_(std::move(mesh)), quad_(quadrature_layout(*mesh_)), n_kl_(prior.n_kl()) {
  const std::size_t nq = quad_.points.size();
  modes_q_.resize(nq * n_kl_);
  f_q_.resize(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    f_q_[q] = f(quad_.points[q]);
    for (int i = 0; i < n_kl_; ++i)
      modes_q_[q * n_kl_ + i] = std::sqrt(prior.modes()[i].lambda) * prior.eigenfunction(i, quad_.points[q]);
  }
  locations_.reserve(points.size());
  for (Point p : points) locations_.push_back(locate(*mesh_, p));
}

PwLinearField ForwardModel::solve(std::span<const double> xi) const {
  if (xi.size() != static_cast<std::size_t>(n_kl_)) throw InvalidArgument("coefficient vector length differs from N_KL");
  const std::size_t nq = quad_.points.size();
  std::vector<double> kappa(nq);
  for (std::size_t q = 0; q < nq; ++q) {
    double t = 0.0;
    for (int i = 0; i < n_kl_; ++i) t += modes_q_[q * n_kl_ + i] * xi[i];
    kappa[q] = conductivity(t);
  }
  return solve_with_quadrature_values(mesh_, quad_, kappa, f_q_);
}

std::vector<double> ForwardModel::operator()(std::span<const double> xi) const {
  const PwLinearField u = solve(xi);
  std::vector<double> g(locations_.size());
  for (std::size_t j = 0; j < locations_.size(); ++j) g[j] = u.evaluate(locations_[j]);
  return g;
}

double potential(std::span<const double> g, const ObservationSet& obs) {
  if (g.size() != obs.values.size() || obs.noise_var.size() != obs.values.size())
    throw InvalidArgument("forward output and observations differ in length");
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double r = g[j] - obs.values[j];
    s += r * r / obs.noise_var[j];
  }
  return 0.5 * s;
}

void ChainConfig::validate() const {
  if (n_steps < 1) throw InvalidArgument("chain needs at least one step");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw InvalidArgument("target acceptance must lie in (0, 1)");
  if (!(initial_scale > 0.0)) throw InvalidArgument("initial proposal scale must be positive");
}

double ChainResult::acceptance_rate() const {
  return final_state.n_total == 0 ? 0.0
                                  : static_cast<double>(final_state.n_accepted) / final_state.n_total;
}

double acceptance_probability(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

ChainResult mh_chain(const std::function<double(std::span<const double>)>& potential_fn, std::size_t dim,
                     const ChainConfig& config) {
  config.validate();
  if (dim == 0) throw InvalidArgument("chain dimension must be positive");
  if (!config.init.empty() && config.init.size() != dim) throw InvalidArgument("initial state has the wrong length");

  ChainState st;
  st.xi = config.init.empty() ? Eigen::VectorXd::Zero(dim)
                              : Eigen::Map<const Eigen::VectorXd>(config.init.data(), dim).eval();
  st.chol = config.initial_scale * Eigen::MatrixXd::Identity(dim, dim);
  st.log_potential = potential_fn(std::span<const double>(st.xi.data(), dim));
  if (!std::isfinite(st.log_potential)) throw NumericalError("potential is not finite at the initial state", 0.0);

  ChainResult out;
  out.dim = dim;
  out.samples.reserve(config.n_steps * dim);
  out.samples.insert(out.samples.end(), st.xi.data(), st.xi.data() + dim);

  RandomStream rng(config.seed, {0x6d68u});
  Eigen::VectorXd u(dim), prop(dim);
  const double d = static_cast<double>(dim);
  for (std::size_t n = 1; n < config.n_steps; ++n) {
    for (std::size_t i = 0; i < dim; ++i) u[i] = rng.normal();
    prop = st.xi + st.chol * u;
    const double phi = potential_fn(std::span<const double>(prop.data(), dim));
    double alpha = 0.0;
    if (std::isfinite(phi)) {
      const double log_ratio = -0.5 * (prop.squaredNorm() - st.xi.squaredNorm()) - (phi - st.log_potential);
      alpha = acceptance_probability(log_ratio);
    }
    ++st.n_total;
    if (alpha > 0.0 && rng.uniform() < alpha) {
      st.xi = prop;
      st.log_potential = phi;
      ++st.n_accepted;
    }
    if (config.ram) {
      const double eta = std::min(1.0, d * std::pow(static_cast<double>(n), -2.0 / 3.0));
      const double c = eta * (alpha - config.target_acceptance) / u.squaredNorm();
      const Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(dim, dim) + c * u * u.transpose();
      const Eigen::MatrixXd m = st.chol * inner * st.chol.transpose();
      Eigen::LLT<Eigen::MatrixXd> llt(m);
      if (llt.info() == Eigen::Success) st.chol = llt.matrixL();
    }
    out.samples.insert(out.samples.end(), st.xi.data(), st.xi.data() + dim);
  }
  out.final_state = std::move(st);
  return out;
}

double PosteriorSummary::xi_std_norm() const {
  double s = 0.0;
  for (double v : xi_std) s += v * v;
  return std::sqrt(s);
}

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  const double mean = pairwise_sum(values) / n;
  if (values.size() < 2) return {mean, 0.0};
  for (double& v : values) v = (v - mean) * (v - mean);
  return {mean, std::sqrt(pairwise_sum(values) / (n - 1.0))};
}

}  // namespace

PosteriorSummary posterior_summary(std::span<const ChainResult> chains, const KLPrior& prior, const MeshPtr& grid,
                                   double burn_in_frac) {
  if (chains.empty()) throw InvalidArgument("posterior summary needs at least one chain");
  if (!(burn_in_frac >= 0.0 && burn_in_frac < 1.0)) throw InvalidArgument("burn-in fraction must lie in [0, 1)");
  const std::size_t dim = static_cast<std::size_t>(prior.n_kl());
  std::vector<std::span<const double>> kept;
  for (const ChainResult& c : chains) {
    if (c.dim != dim) throw InvalidArgument("chain dimension differs from N_KL");
    const std::size_t n = c.n_samples();
    const std::size_t skip = static_cast<std::size_t>(std::floor(burn_in_frac * n));
    for (std::size_t i = skip; i < n; ++i) kept.push_back(c.sample(i));
  }
  if (kept.empty()) throw InvalidArgument("no samples left after burn-in");

  PosteriorSummary s;
  s.grid = grid;
  s.n_samples = kept.size();
  std::vector<double> column(kept.size());
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t k = 0; k < kept.size(); ++k) column[k] = kept[k][i];
    const Moments m = moments(column);
    s.xi_mean.push_back(m.mean);
    s.xi_std.push_back(m.std);
  }
  if (grid) {
    const Index nv = grid->n_vertices();
    std::vector<std::vector<double>> phi(nv, std::vector<double>(dim));
    for (Index v = 0; v < nv; ++v)
      for (std::size_t i = 0; i < dim; ++i)
        phi[v][i] = std::sqrt(prior.modes()[i].lambda) * prior.eigenfunction(static_cast<int>(i), grid->vertex(v));
    s.kappa_mean.resize(nv);
    s.kappa_std.resize(nv);
    for (Index v = 0; v < nv; ++v) {
      for (std::size_t k = 0; k < kept.size(); ++k) {
        double t = 0.0;
        for (std::size_t i = 0; i < dim; ++i) t += phi[v][i] * kept[k][i];
        column[k] = conductivity(t);
      }
      const Moments m = moments(column);
      s.kappa_mean[v] = m.mean;
      s.kappa_std[v] = m.std;
    }
  }
  return s;
}

ObservationSet synthesize_observations(const PwLinearField& reference, std::span<const Point> points,
                                       double noise_var, std::uint64_t seed) {
  if (noise_var < 0.0) throw InvalidArgument("noise variance must be non-negative");
  ObservationSet obs;
  obs.points.assign(points.begin(), points.end());
  const double sd = std::sqrt(noise_var);
  for (std::size_t j = 0; j < points.size(); ++j) {
    RandomStream rng(seed, {0x6f6273u, j});
    const double noise = sd > 0.0 ? sd * rng.normal() : 0.0;
    obs.values.push_back(reference.evaluate(points[j]) + noise);
    obs.noise_var.push_back(noise_var);
  }
  return obs;
}

}  // namespace rmfem::bayes

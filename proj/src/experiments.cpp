#include "rmfem/experiments.hpp"

#include <cmath>
#include <numbers>

#include "rmfem/random.hpp"
#include "rmfem/summation.hpp"

namespace rmfem::experiments {

namespace {
constexpr double kPi = std::numbers::pi;

double mean(const std::vector<double>& v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

MeshPtr share(SimplicialMesh m) { return std::make_shared<const SimplicialMesh>(std::move(m)); }
}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope needs at least two matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log slope needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

double ConvergenceLevel::balance() const { return mean(randomization) / fem_error; }

double ConvergenceLevel::randomization_rms() const {
  std::vector<double> sq(randomization.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = randomization[i] * randomization[i];
  return std::sqrt(mean(sq));
}

ConvergenceResult run_convergence(const ConvergenceConfig& config, const ThreadPool* pool) {
  if (config.n_values.size() < 2) throw InvalidArgument("convergence study needs at least two mesh sizes");
  if (config.n_realizations == 0) throw InvalidArgument("convergence study needs at least one realization");
  const catalog::Problem prob = catalog::smooth_1d();
  PerturbationConfig pc;
  pc.p = config.p;
  pc.radius = config.radius;
  pc.seed = config.seed;
  pc.validate();

  ConvergenceResult res;
  res.config = config;
  for (int n : config.n_values) {
    const MeshPtr mesh = share(build_uniform_1d(n));
    const PwLinearField u_h = solve(prob.problem, mesh);
    ConvergenceLevel lvl;
    lvl.n = n;
    lvl.h = mesh->h();
    lvl.fem_error = error_norms(u_h, prob.exact->u, prob.exact->grad, 8).h1;
    lvl.rm_errors.resize(config.n_realizations);
    lvl.randomization.resize(config.n_realizations);
    parallel_for(pool, config.n_realizations, [&](std::size_t r) {
      const PerturbedMesh pm = perturb(mesh, pc, r);
      const PwLinearField ut = solve(prob.problem, pm.mesh());
      lvl.rm_errors[r] = error_norms(ut, prob.exact->u, prob.exact->grad, 8).h1;
      lvl.randomization[r] = h1_distance_1d(u_h, ut);
    });
    res.levels.push_back(std::move(lvl));
  }
  std::vector<double> h, fem, rms;
  for (const auto& l : res.levels) {
    h.push_back(l.h);
    fem.push_back(l.fem_error);
    rms.push_back(l.randomization_rms());
  }
  res.fem_slope = loglog_slope(h, fem);
  res.randomization_slope = loglog_slope(h, rms);
  for (std::size_t r = 0; r < config.n_realizations; ++r) {
    std::vector<double> e;
    for (const auto& l : res.levels) e.push_back(l.rm_errors[r]);
    res.rm_slopes.push_back(loglog_slope(h, e));
  }
  return res;
}

AdaptSetup adapt1d_setup() {
  AdaptSetup s{catalog::oscillatory_1d(15.0, 50.0), share(build_uniform_1d(30)), {}};
  s.config.gamma = 1e-2;
  s.config.p = 3.0;
  s.config.n_realizations = 20;
  s.config.estimator = EstimatorKind::RM1;
  s.config.companions = {EstimatorKind::RM2, EstimatorKind::Babuska};
  return s;
}

AdaptSetup arctan_setup() {
  AdaptSetup s{catalog::arctan_front(20.0), share(build_structured_2d(5)), {}};
  s.config.gamma = 0.1;
  s.config.p = 3.0;
  s.config.n_realizations = 50;
  s.config.estimator = EstimatorKind::RM2;
  s.config.include_boundary = true;
  s.config.coarsen_factor = 0.0;
  s.config.companions = {EstimatorKind::Residual2D};
  return s;
}

AdaptSetup lshape_setup() {
  AdaptSetup s{catalog::lshape_corner(), share(build_lshape_2d(3)), {}};
  s.config.gamma = 0.06;
  s.config.p = 3.0;
  s.config.n_realizations = 50;
  s.config.estimator = EstimatorKind::RM2;
  s.config.include_boundary = true;
  s.config.coarsen_factor = 0.0;
  s.config.companions = {EstimatorKind::Residual2D};
  return s;
}

void BipConfig::validate() const {
  if (dim != 1 && dim != 2) throw InvalidArgument("dimension must be 1 or 2");
  if (n < 1 || reference_n < 1 || grid_n < 1) throw InvalidArgument("mesh sizes must be positive");
  if (n_kl < 1) throw InvalidArgument("N_KL must be positive");
  if (!(p >= 1.0)) throw InvalidArgument("perturbation exponent p must be >= 1");
  if (!(noise_var > 0.0)) throw InvalidArgument("noise variance must be positive");
  if (!(burn_in >= 0.0 && burn_in < 1.0)) throw InvalidArgument("burn-in fraction must lie in [0, 1)");
  if (probabilistic && n_outer == 0) throw InvalidArgument("probabilistic posterior needs at least one outer chain");
  if ((deterministic && det_steps == 0) || (probabilistic && inner_steps == 0))
    throw InvalidArgument("chains need at least one step");
}

BipConfig bip1d_config(Conductivity1D truth) {
  BipConfig c;
  c.dim = 1;
  c.truth = truth;
  c.n_kl = truth == Conductivity1D::Smooth ? 4 : 9;
  return c;
}

BipConfig bip2d_config() {
  BipConfig c;
  c.dim = 2;
  c.n = 10;
  c.n_kl = 6;
  c.alpha = 1.3;
  c.noise_var = 1e-6;
  c.n_obs = 50;
  c.det_steps = 2000;
  c.n_outer = 2;
  c.inner_steps = 2000;
  c.reference_n = 128;
  c.grid_n = 20;
  return c;
}

namespace {

MeshPtr build_mesh(int dim, int n) { return share(dim == 1 ? build_uniform_1d(n) : build_structured_2d(n)); }

ScalarFunction source(int dim) {
  if (dim == 1) return [](Point x) { return std::sin(2.0 * kPi * x.x); };
  return [](Point x) { return 8.0 * kPi * kPi * std::sin(2.0 * kPi * x.x) * std::sin(2.0 * kPi * x.y); };
}

bayes::ChainResult run_chain(const bayes::ForwardModel& fm, const bayes::ObservationSet& obs, int n_kl,
                             std::size_t steps, double target, std::uint64_t seed) {
  auto phi = [&](std::span<const double> xi) {
    try {
      return bayes::potential(fm(xi), obs);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  bayes::ChainConfig cc;
  cc.n_steps = steps;
  cc.target_acceptance = target;
  cc.seed = seed;
  return bayes::mh_chain(phi, static_cast<std::size_t>(n_kl), cc);
}

}  // namespace

BipResult run_bip(const BipConfig& config, const ThreadPool* pool) {
  config.validate();
  BipResult res;
  res.config = config;
  res.prior = bayes::prior_spectrum(config.dim, config.alpha, config.n_kl);
  const ScalarFunction f = source(config.dim);

  // Observation points.
  std::vector<Point> points;
  if (config.dim == 1) {
    for (int i = 1; i <= 9; ++i) points.push_back({i / 10.0, 0.0});
  } else {
    RandomStream rng(config.seed, {5u});
    for (std::size_t j = 0; j < config.n_obs; ++j) {
      const double x = rng.uniform(), y = rng.uniform();
      points.push_back({x, y});
    }
  }

  // Synthetic data from a fine reference solve.
  const MeshPtr ref_mesh = build_mesh(config.dim, config.reference_n);
  std::optional<PwLinearField> reference;
  if (config.dim == 1 && config.truth == Conductivity1D::Discontinuous) {
    EllipticProblem truth;
    truth.kappa = [](Point x) {
      if (x.x > 0.2 && x.x < 0.6) return 1.5;
      if (x.x > 0.6 && x.x < 0.8) return 0.5;
      return 1.0;
    };
    truth.f = f;
    reference = solve(truth, ref_mesh);
  } else {
    // The truth is fixed; --alpha and --nkl only change the inference prior.
    bayes::KLPrior truth_prior;
    if (config.dim == 1) {
      truth_prior = bayes::prior_spectrum(1, 1.0, 4);
      res.xi_true = {1.0, 1.0, 0.25, 0.25};
    } else {
      truth_prior = bayes::prior_spectrum(2, 1.3, 6);
      for (int i = 1; i <= 6; ++i) res.xi_true.push_back(i % 2 == 1 ? 10.0 : -10.0);
    }
    reference = bayes::ForwardModel(ref_mesh, truth_prior, f, {}).solve(res.xi_true);
    // Coefficients of the truth in the inference expansion, when that expansion contains it.
    if (config.alpha != truth_prior.alpha_exp() || config.n_kl < truth_prior.n_kl())
      res.xi_true.clear();
    else
      res.xi_true.resize(config.n_kl, 0.0);
  }
  res.obs = bayes::synthesize_observations(*reference, points, config.noise_var, substream_key(config.seed, {1u}));

  res.inference_mesh = build_mesh(config.dim, config.n);
  const MeshPtr grid = build_mesh(config.dim, config.grid_n);

  if (config.deterministic) {
    const bayes::ForwardModel fm(res.inference_mesh, res.prior, f, points);
    res.det_chain = run_chain(fm, res.obs, config.n_kl, config.det_steps, config.target_acceptance,
                              substream_key(config.seed, {2u}));
    res.det = bayes::posterior_summary(std::span(&*res.det_chain, 1), res.prior, grid, config.burn_in);
  }
  if (config.probabilistic) {
    PerturbationConfig pc;
    pc.p = config.p;
    pc.seed = substream_key(config.seed, {3u});
    res.prob_chains.resize(config.n_outer);
    parallel_for(pool, config.n_outer, [&](std::size_t k) {
      const PerturbedMesh pm = perturb(res.inference_mesh, pc, k);
      const bayes::ForwardModel fm(pm.mesh(), res.prior, f, points);
      res.prob_chains[k] = run_chain(fm, res.obs, config.n_kl, config.inner_steps, config.target_acceptance,
                                     substream_key(config.seed, {4u, k}));
    });
    res.prob = bayes::posterior_summary(res.prob_chains, res.prior, grid, config.burn_in);
  }
  return res;
}

}  // namespace rmfem::experiments

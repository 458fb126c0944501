#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rmfem/fem.hpp"
#include "rmfem/mesh.hpp"

namespace rmfem::bayes {

/// Eigenpair of the Dirichlet Laplacian on (0,1)^dim: phi = sqrt(2) sin(j pi x) in 1D,
/// 2 sin(j pi x) sin(k pi y) in 2D (k = 0 in 1D).
struct KLMode {
  double lambda = 0.0;
  int j = 1;
  int k = 0;
};

/// Truncated Karhunen-Loeve expansion of N(0, (-Laplacian)^{-alpha}).
class KLPrior {
 public:
  KLPrior() = default;  // empty expansion
  KLPrior(int dim, double alpha_exp, std::vector<KLMode> modes);

  int dim() const { return dim_; }
  double alpha_exp() const { return alpha_; }
  int n_kl() const { return static_cast<int>(modes_.size()); }
  const std::vector<KLMode>& modes() const { return modes_; }

  double eigenfunction(int i, Point x) const;
  /// sum_i sqrt(lambda_i) phi_i(x) xi_i
  double theta(std::span<const double> xi, Point x) const;
  /// Prior variance of theta(x): sum_i lambda_i phi_i(x)^2.
  double variance(Point x) const;

 private:
  int dim_ = 1;
  double alpha_ = 1.0;
  std::vector<KLMode> modes_;
};

/// Eigenvalues in decreasing order; 2D ties broken by (j, k) lexicographically.
KLPrior prior_spectrum(int dim, double alpha_exp, int n_kl);

ScalarFunction kl_to_field(std::span<const double> xi, const KLPrior& prior);

/// exp(theta) with theta clamped to [-20, 20].
double conductivity(double theta);

struct ObservationSet {
  std::vector<Point> points;
  std::vector<double> values;
  std::vector<double> noise_var;  // per component

  void validate() const;
};

/// Maps KL coefficients to point values of the solution of -div(exp(theta) grad u) = f, u = 0 on
/// the boundary. Quadrature, eigenfunction values and observation locations are cached, so one
/// evaluation costs a coefficient update and a solve.
class ForwardModel {
 public:
  ForwardModel(MeshPtr mesh, const KLPrior& prior, const ScalarFunction& f, std::span<const Point> points);

  std::size_t n_observations() const { return locations_.size(); }
  const MeshPtr& mesh() const { return mesh_; }
  std::vector<double> operator()(std::span<const double> xi) const;
  PwLinearField solve(std::span<const double> xi) const;

 private:
  MeshPtr mesh_;
  QuadratureLayout quad_;
  int n_kl_;
  std::vector<double> modes_q_;  // sqrt(lambda_i) phi_i at each quadrature point, n_kl per point
  std::vector<double> f_q_;
  std::vector<Location> locations_;
};

/// 1/2 sum_j (g_j - y_j)^2 / sigma_j^2.
double potential(std::span<const double> g, const ObservationSet& obs);

struct ChainState {
  Eigen::VectorXd xi;
  Eigen::MatrixXd chol;  // lower triangular, positive diagonal
  std::size_t n_accepted = 0;
  std::size_t n_total = 0;
  double log_potential = 0.0;
};

struct ChainConfig {
  std::size_t n_steps = 1000;  // retained states, the initial one included
  bool ram = true;
  double target_acceptance = 0.25;
  double initial_scale = 0.1;  // S_0 = initial_scale * I
  std::uint64_t seed = 0;
  std::vector<double> init;  // empty: zero vector

  void validate() const;
};

struct ChainResult {
  std::size_t dim = 0;
  std::vector<double> samples;  // n_steps x dim, row-major
  ChainState final_state;

  std::size_t n_samples() const { return dim == 0 ? 0 : samples.size() / dim; }
  std::span<const double> sample(std::size_t i) const { return {samples.data() + i * dim, dim}; }
  double acceptance_rate() const;
};

/// Metropolis-Hastings for the density proportional to N(xi; 0, I) exp(-potential(xi)),
/// with the robust adaptive Metropolis update of the proposal factor when `ram` is set.
/// Proposals with a non-finite potential are rejected.
ChainResult mh_chain(const std::function<double(std::span<const double>)>& potential_fn, std::size_t dim,
                     const ChainConfig& config);

/// min(1, exp(log_ratio)).
double acceptance_probability(double log_ratio);

struct PosteriorSummary {
  MeshPtr grid;
  std::vector<double> kappa_mean;  // at grid vertices
  std::vector<double> kappa_std;
  std::vector<double> xi_mean;
  std::vector<double> xi_std;
  std::size_t n_samples = 0;

  PwLinearField mean_field() const { return PwLinearField(grid, kappa_mean); }
  PwLinearField std_field() const { return PwLinearField(grid, kappa_std); }
  double xi_std_norm() const;
};

/// Pools the post-burn-in states of all chains. Each chain drops its first
/// floor(burn_in_frac * n) states.
PosteriorSummary posterior_summary(std::span<const ChainResult> chains, const KLPrior& prior, const MeshPtr& grid,
                                   double burn_in_frac = 0.2);

/// Point values of `reference` plus N(0, noise_var) noise drawn from substream (seed, {j}).
ObservationSet synthesize_observations(const PwLinearField& reference, std::span<const Point> points,
                                       double noise_var, std::uint64_t seed);

}  // namespace rmfem::bayes

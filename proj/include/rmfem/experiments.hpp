#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rmfem/adapt.hpp"
#include "rmfem/bayes.hpp"
#include "rmfem/catalog.hpp"
#include "rmfem/parallel.hpp"

namespace rmfem::experiments {

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---- a priori convergence on the smooth 1D problem ----

struct ConvergenceConfig {
  std::vector<int> n_values = {16, 32, 64, 128, 256};
  double p = 1.0;
  std::size_t n_realizations = 20;
  double radius = 0.5;
  std::uint64_t seed = 0;
};

struct ConvergenceLevel {
  int n = 0;
  double h = 0.0;
  double fem_error = 0.0;                // |u - u_h|_{H1}
  std::vector<double> rm_errors;         // |u - u~_h|_{H1} per realization
  std::vector<double> randomization;     // |u_h - u~_h|_{H1} per realization

  double balance() const;           // mean randomization / fem_error
  double randomization_rms() const;  // (mean randomization^2)^{1/2}
};

struct ConvergenceResult {
  ConvergenceConfig config;
  std::vector<ConvergenceLevel> levels;
  double fem_slope = 0.0;
  std::vector<double> rm_slopes;  // one per realization
  double randomization_slope = 0.0;
};

ConvergenceResult run_convergence(const ConvergenceConfig& config, const ThreadPool* pool = nullptr);

// ---- adaptivity setups at desk scale ----

struct AdaptSetup {
  catalog::Problem problem;
  MeshPtr initial;
  AdaptConfig config;
};

/// a = 15, b = 50, N = 30, gamma = 1e-2, p = 3, N_MC = 20, RM1 marking with RM2 and Babuska companions.
AdaptSetup adapt1d_setup();
/// beta = 20, h = 1/5, gamma = 0.1, N_MC = 50, RM2 with boundary perturbation, residual companion.
AdaptSetup arctan_setup();
/// h = 1/3, gamma = 0.06, N_MC = 50, RM2 with boundary perturbation, residual companion.
AdaptSetup lshape_setup();

// ---- Bayesian inverse problems ----

enum class Conductivity1D { Smooth, Discontinuous };

struct BipConfig {
  int dim = 1;
  Conductivity1D truth = Conductivity1D::Smooth;  // 1D only
  int n = 10;          // elements in 1D, subdivisions per side in 2D
  int n_kl = 4;
  double alpha = 1.0;
  std::size_t det_steps = 20000;
  std::size_t n_outer = 10;
  std::size_t inner_steps = 20000;
  double noise_var = 1e-8;
  std::size_t n_obs = 50;  // 2D: uniform random locations; 1D uses i/10
  double burn_in = 0.2;
  double target_acceptance = 0.25;
  double p = 1.0;
  int reference_n = 1024;
  int grid_n = 100;
  bool deterministic = true;
  bool probabilistic = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// 1D defaults: f = sin(2 pi x), alpha = 1, noise 1e-8, N_KL = 4 (9 for the discontinuous truth).
BipConfig bip1d_config(Conductivity1D truth);
/// 2D defaults: f = 8 pi^2 sin(2 pi x) sin(2 pi y), alpha = 1.3, N_KL = 6, 50 points, noise 1e-6,
/// h = 1/10, 2 chains of 2000 steps.
BipConfig bip2d_config();

struct BipResult {
  BipConfig config;
  bayes::KLPrior prior;
  bayes::ObservationSet obs;
  std::vector<double> xi_true;  // empty when the truth is not a KL field of the prior
  MeshPtr inference_mesh;
  std::optional<bayes::ChainResult> det_chain;
  std::vector<bayes::ChainResult> prob_chains;
  std::optional<bayes::PosteriorSummary> det;
  std::optional<bayes::PosteriorSummary> prob;
};

BipResult run_bip(const BipConfig& config, const ThreadPool* pool = nullptr);

}  // namespace rmfem::experiments

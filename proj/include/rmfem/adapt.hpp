#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rmfem/estimators.hpp"
#include "rmfem/fem.hpp"
#include "rmfem/mesh.hpp"
#include "rmfem/parallel.hpp"

namespace rmfem {

struct AdaptConfig {
  double gamma = 1e-2;
  EstimatorKind estimator = EstimatorKind::RM1;
  std::size_t n_realizations = 20;
  double p = 3.0;
  double c_up = 1.0;
  double coarsen_factor = 0.1;  // 1D only; 0 disables coarsening
  int max_iterations = 30;
  bool include_boundary = false;
  std::uint64_t seed = 0;
  // Reuse each vertex's draws across iterations (position-keyed streams, one seed for the run).
  // Otherwise every iteration draws afresh from substream (seed, iteration).
  bool common_random_numbers = true;
  Normalization normalization = Normalization::SquaredIndicators;
  std::vector<EstimatorKind> companions;  // evaluated and recorded, not used for marking
  int error_quad_order = 8;

  void validate() const;
};

struct AdaptIteration {
  int iteration = 0;  // 1-based
  Index n_elements = 0;
  double estimator = 0.0;
  double estimator_sq_std_error = 0.0;
  double true_error = 0.0;  // NaN without an exact solution
  double solution_norm = 0.0;
  double effectivity = 0.0;  // NaN without an exact solution
  double gamma_loc = 0.0;
  std::vector<std::pair<EstimatorKind, double>> companions;
  MeshPtr mesh;
  std::vector<double> local;
  std::vector<Index> refined;    // elements of `mesh` marked for refinement
  std::vector<Index> coarsened;  // vertices of `mesh` removed
};

struct AdaptResult {
  std::vector<AdaptIteration> iterations;
  bool converged = false;
  MeshPtr final_mesh;
  std::vector<double> final_values;
};

/// gamma |u_h|_{H1} / (c_up sqrt(N)).
double gamma_loc(double gamma, const PwLinearField& u_h, Index n_elements, double c_up = 1.0);

/// Error indicator of the requested kind on the current solution.
EstimatorReport compute_estimator(EstimatorKind kind, const EllipticProblem& problem, const PwLinearField& u_h,
                                  const PerturbationConfig& perturbation, std::size_t n_realizations,
                                  const ThreadPool* pool, Normalization normalization);

/// Solve, estimate, mark {eta_K > gamma_loc}, refine (and coarsen in 1D) until nothing is marked.
AdaptResult adapt_loop(const EllipticProblem& problem, const MeshPtr& initial, const AdaptConfig& config,
                       const std::optional<ExactSolution>& exact = std::nullopt, const ThreadPool* pool = nullptr);

}  // namespace rmfem

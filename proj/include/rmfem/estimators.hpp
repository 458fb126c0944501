#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmfem/fem.hpp"
#include "rmfem/mesh.hpp"
#include "rmfem/parallel.hpp"

namespace rmfem {

enum class EstimatorKind { RM1, RM2, Babuska, Residual2D };

std::string to_string(EstimatorKind kind);
/// Accepts "RM1", "RM2", "BABUSKA", "RESIDUAL2D" (case-insensitive).
EstimatorKind estimator_kind_from_string(const std::string& name);

/// How Monte Carlo estimators are rescaled by the moments of the perturbation law.
enum class Normalization {
  None,               // raw expectations
  SquaredIndicators,  // eta_K^2 divided by E|a| (RM1) or E|a|^2 (RM2)
  Estimator,          // eta_K divided by E|a| (RM1) or E|a|^2 (RM2)
};

std::string to_string(Normalization norm);
/// Accepts "none", "squared", "estimator" (case-insensitive).
Normalization normalization_from_string(const std::string& name);

struct EstimatorReport {
  EstimatorKind kind = EstimatorKind::RM1;
  std::vector<double> local;  // eta_K >= 0
  double global = 0.0;        // sqrt(sum eta_K^2)
  std::size_t n_realizations = 0;
  bool normalized = false;
  // Monte Carlo standard error of global^2 (0 for deterministic kinds).
  double global_sq_std_error = 0.0;
};

/// Per-element raw squared indicator for one realization, from the vertex displacements.
/// I~u_h is the Lagrange interpolant of u_h on the perturbed mesh.
/// RM1: h_K^{-(p-1)} |(u_h - I~u_h)'|^2 integrated over K~, exactly.
std::vector<double> rm1_sample_1d(const PwLinearField& u_h, std::span<const Point> displacement, double p);
/// RM2: h_K^{-(2p-2)} |K| |grad u_h|_K - grad I~u_h|_K~|^2, with h_K from element_sizes so that
/// it matches the length that scales the perturbation.
std::vector<double> rm2_sample(const PwLinearField& u_h, std::span<const Point> displacement, double p);

/// Monte Carlo mean over the given realizations.
EstimatorReport estimator_rm1_1d(const PwLinearField& u_h, std::span<const PerturbedMesh> perturbations,
                                 Normalization norm = Normalization::SquaredIndicators,
                                 RadialLaw law = RadialLaw::UniformBall, double radius = 0.5);
EstimatorReport estimator_rm2(const PwLinearField& u_h, std::span<const PerturbedMesh> perturbations,
                              Normalization norm = Normalization::SquaredIndicators,
                              RadialLaw law = RadialLaw::UniformBall, double radius = 0.5);

/// Same estimators with realizations 0..n-1 drawn from `config`; the reduction order is fixed,
/// so the result does not depend on the pool size.
EstimatorReport monte_carlo_estimator(EstimatorKind kind, const PwLinearField& u_h, const PerturbationConfig& config,
                                      std::size_t n_realizations, const ThreadPool* pool = nullptr,
                                      Normalization norm = Normalization::SquaredIndicators);

/// J(u_h) = sqrt(sum over interior nodes of min(h_i, h_{i+1}) [u_h']^2).
double jump_functional_1d(const PwLinearField& u_h);

struct BabuskaResult {
  EstimatorReport report;
  std::vector<double> ell_left;   // l_j at the left end of element j
  std::vector<double> ell_right;  // l_j at the right end
};
BabuskaResult babuska_1d(const PwLinearField& u_h, const ScalarFunction& kappa);

struct LambdaTerm {
  double zeta = 0.5;
  double value = 0.0;
};
LambdaTerm lambda_term_1d(const ScalarFunction& f, const PwLinearField& u_h, const BabuskaResult& babuska,
                          double zeta);

/// eta_K^2 = h_K^2 |f|^2_{L2(K)} + h_K |[grad u_h . n]|^2_{L2(dK)}, boundary edges excluded.
EstimatorReport residual_2d(const PwLinearField& u_h, const ScalarFunction& f);

double effectivity(const EstimatorReport& report, double true_error);

/// Inputs for the two-sided bounds relating the estimators to J(u_h).
struct LemmaInputs {
  double j_sq = 0.0;
  double rm1_sq = 0.0, rm1_sq_se = 0.0;  // raw Monte Carlo mean and its standard error
  double rm2_sq = 0.0, rm2_sq_se = 0.0;
  double babuska_sq = 0.0;
  LawMoments moments;
  double lambda = 1.0;
  double p = 1.0;
  double h = 0.0;
  double kappa_min = 1.0;
  double kappa_max = 1.0;
  double n_std_errors = 3.0;
};

struct InequalityCheck {
  std::string name;
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  double slack = 0.0;
  bool lower_checked = true;
  bool pass = false;
};

struct LemmaRecord {
  bool rm1_lower_hypothesis = false;
  std::vector<InequalityCheck> checks;
  bool all_pass() const;
};

LemmaRecord check_lemma_bounds(const LemmaInputs& in);

}  // namespace rmfem

#include "rmfem/adapt.hpp"

#include <cmath>
#include <limits>

#include "rmfem/random.hpp"

namespace rmfem {

void AdaptConfig::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
  if (!(c_up > 0.0)) throw InvalidArgument("c_up must be positive");
  if (!(p >= 1.0)) throw InvalidArgument("perturbation exponent p must be >= 1");
  if (coarsen_factor < 0.0 || coarsen_factor >= 1.0) throw InvalidArgument("coarsen_factor must lie in [0, 1)");
  if ((estimator == EstimatorKind::RM1 || estimator == EstimatorKind::RM2) && n_realizations == 0)
    throw InvalidArgument("Monte Carlo estimators need at least one realization");
}

double gamma_loc(double gamma, const PwLinearField& u_h, Index n_elements, double c_up) {
  const double norm = h1_seminorm(u_h);
  if (!(norm > 0.0)) throw InvalidArgument("gamma_loc is undefined for a field with zero H1 seminorm");
  return gamma * norm / (c_up * std::sqrt(static_cast<double>(n_elements)));
}

EstimatorReport compute_estimator(EstimatorKind kind, const EllipticProblem& problem, const PwLinearField& u_h,
                                  const PerturbationConfig& perturbation, std::size_t n_realizations,
                                  const ThreadPool* pool, Normalization normalization) {
  switch (kind) {
    case EstimatorKind::RM1:
    case EstimatorKind::RM2:
      return monte_carlo_estimator(kind, u_h, perturbation, n_realizations, pool, normalization);
    case EstimatorKind::Babuska:
      return babuska_1d(u_h, problem.kappa).report;
    case EstimatorKind::Residual2D:
      return residual_2d(u_h, problem.f);
  }
  throw InvalidArgument("unknown estimator kind");
}

namespace {

SimplicialMesh refine_and_coarsen_1d(const SimplicialMesh& mesh, const std::vector<Index>& refined,
                                     std::vector<Index>& coarsened) {
  std::vector<bool> split(mesh.n_elements(), false);
  for (Index k : refined) split[k] = true;
  std::vector<bool> mark(mesh.n_vertices(), false);
  for (Index v : coarsened) mark[v] = true;
  std::vector<double> x;
  std::vector<Index> removed;
  bool removed_previous = false;
  for (Index v = 0; v < mesh.n_vertices(); ++v) {
    const bool remove = mark[v] && !removed_previous;
    removed_previous = remove;
    if (remove)
      removed.push_back(v);
    else
      x.push_back(mesh.vertex(v).x);
    if (v < mesh.n_elements() && split[v]) x.push_back(0.5 * (mesh.vertex(v).x + mesh.vertex(v + 1).x));
  }
  coarsened = std::move(removed);
  return build_from_points_1d(std::move(x));
}

}  // namespace

AdaptResult adapt_loop(const EllipticProblem& problem, const MeshPtr& initial, const AdaptConfig& config,
                       const std::optional<ExactSolution>& exact, const ThreadPool* pool) {
  config.validate();
  AdaptResult result;
  MeshPtr mesh = initial;
  for (int it = 1; it <= config.max_iterations; ++it) {
    const PwLinearField u_h = solve(problem, mesh);
    PerturbationConfig pc;
    pc.p = config.p;
    pc.include_boundary = config.include_boundary;
    const std::uint64_t iter_key = config.common_random_numbers ? 0u : static_cast<std::uint64_t>(it);
    pc.seed = config.common_random_numbers ? config.seed : substream_key(config.seed, {iter_key});
    if (config.common_random_numbers) pc.stream_key = StreamKey::VertexPosition;
    const EstimatorReport report =
        compute_estimator(config.estimator, problem, u_h, pc, config.n_realizations, pool, config.normalization);

    AdaptIteration rec;
    rec.iteration = it;
    rec.n_elements = mesh->n_elements();
    rec.estimator = report.global;
    rec.estimator_sq_std_error = report.global_sq_std_error;
    rec.solution_norm = h1_seminorm(u_h);
    rec.gamma_loc = gamma_loc(config.gamma, u_h, mesh->n_elements(), config.c_up);
    rec.true_error = std::numeric_limits<double>::quiet_NaN();
    rec.effectivity = std::numeric_limits<double>::quiet_NaN();
    if (exact) {
      rec.true_error = error_norms(u_h, exact->u, exact->grad, config.error_quad_order).h1;
      if (rec.true_error > 0.0) rec.effectivity = effectivity(report, rec.true_error);
    }
    for (EstimatorKind kind : config.companions) {
      PerturbationConfig cc = pc;
      cc.seed = substream_key(config.seed, {iter_key, 1u + static_cast<std::uint64_t>(kind)});
      rec.companions.emplace_back(
          kind, compute_estimator(kind, problem, u_h, cc, config.n_realizations, pool, config.normalization).global);
    }
    rec.mesh = mesh;
    rec.local = report.local;
    for (Index k = 0; k < mesh->n_elements(); ++k)
      if (report.local[k] > rec.gamma_loc) rec.refined.push_back(k);

    const bool done = rec.refined.empty();
    const bool can_continue = !done && it < config.max_iterations;
    if (can_continue && mesh->dim() == 1 && config.coarsen_factor > 0.0) {
      const double threshold = config.coarsen_factor * rec.gamma_loc;
      for (Index v = 1; v + 1 < mesh->n_vertices(); ++v)
        if (report.local[v - 1] < threshold && report.local[v] < threshold) rec.coarsened.push_back(v);
    }
    MeshPtr next;
    if (can_continue) {
      if (mesh->dim() == 1)
        next = std::make_shared<const SimplicialMesh>(refine_and_coarsen_1d(*mesh, rec.refined, rec.coarsened));
      else
        next = std::make_shared<const SimplicialMesh>(refine(*mesh, rec.refined));
    }
    result.iterations.push_back(std::move(rec));
    if (done) {
      result.converged = true;
      result.final_mesh = mesh;
      result.final_values = u_h.values();
      break;
    }
    if (!can_continue) {
      result.final_mesh = mesh;
      result.final_values = u_h.values();
      break;
    }
    mesh = next;
  }
  return result;
}

}  // namespace rmfem

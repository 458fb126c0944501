#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <span>
#include <vector>

#include "rmfem/mesh.hpp"

namespace rmfem {

using ScalarFunction = std::function<double(Point)>;
using VectorFunction = std::function<Point(Point)>;

struct ExactSolution {
  ScalarFunction u;
  VectorFunction grad;
};

/// -div(kappa grad u) = f in D, u = dirichlet on the boundary.
struct EllipticProblem {
  ScalarFunction kappa;
  ScalarFunction f;
  ScalarFunction dirichlet;  // empty: homogeneous
};

/// Continuous piecewise-linear function given by its nodal values.
class PwLinearField {
 public:
  PwLinearField(MeshPtr mesh, std::vector<double> values);

  const MeshPtr& mesh() const { return mesh_; }
  const std::vector<double>& values() const { return values_; }
  double value(Index i) const { return values_[i]; }

  /// Constant gradient on element k (y = 0 in 1D).
  Point gradient(Index k) const;
  double evaluate(Point p) const;
  double evaluate(const Location& loc) const;

 private:
  MeshPtr mesh_;
  std::vector<double> values_;
};

/// Quadrature points of the assembly rule, `points_per_element` consecutive entries per element.
struct QuadratureLayout {
  int points_per_element = 0;
  std::vector<Point> points;
  std::vector<double> weights;  // physical weights, summing to the element measure
  std::vector<double> shape;    // (dim + 1) basis values per point
};

/// 1D: 5-point Gauss-Legendre per interval. 2D: degree-4 six-point rule per triangle.
QuadratureLayout quadrature_layout(const SimplicialMesh& mesh);

/// Full stiffness matrix and load vector over all vertices, before boundary conditions.
struct Assembly {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd load;
};
Assembly assemble(const SimplicialMesh& mesh, const QuadratureLayout& quad, std::span<const double> kappa_q,
                  std::span<const double> f_q);

/// Galerkin solve with coefficient and source given at the layout's quadrature points.
/// `boundary_values` holds g at every vertex (only boundary entries are read); empty means zero.
PwLinearField solve_with_quadrature_values(const MeshPtr& mesh, const QuadratureLayout& quad,
                                           std::span<const double> kappa_q, std::span<const double> f_q,
                                           std::span<const double> boundary_values = {});

PwLinearField solve(const EllipticProblem& problem, const MeshPtr& mesh);

enum class InterpolationRule {
  Lagrange,          // nodal value at x~_i is field(x~_i)
  CarryNodalValues,  // nodal value at x~_i is field(x_i)
};

/// Interpolant of `field` on a perturbation of its own mesh.
PwLinearField interpolate(const PwLinearField& field, const PerturbedMesh& target,
                          InterpolationRule rule = InterpolationRule::Lagrange);

/// field(x_i + delta_i) - field(x_i) for every vertex. Each displaced point is searched in the
/// vertex patch first; throws OutOfDomain if it leaves the mesh.
std::vector<double> displaced_value_increments(const PwLinearField& field, std::span<const Point> delta);

double h1_seminorm(const PwLinearField& field);
double l2_norm(const PwLinearField& field);

struct ErrorNorms {
  double h1 = 0.0;  // seminorm of u - u_h
  double l2 = 0.0;
};
/// quad_order points per direction: Gauss-Legendre in 1D, collapsed tensor rule in 2D.
ErrorNorms error_norms(const PwLinearField& field, const ScalarFunction& exact_u, const VectorFunction& exact_grad,
                       int quad_order = 6);

/// Sorted union of the vertex coordinates of two 1D meshes on the same interval.
std::vector<double> supermesh_1d(const SimplicialMesh& a, const SimplicialMesh& b);

/// |a - b|_{H^1} for two 1D fields on possibly different meshes, integrated exactly on the supermesh.
double h1_distance_1d(const PwLinearField& a, const PwLinearField& b);

}  // namespace rmfem

#include "rmfem/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "rmfem/quadrature.hpp"

namespace rmfem {

PwLinearField::PwLinearField(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (!mesh_) throw InvalidArgument("field needs a mesh");
  if (values_.size() != static_cast<std::size_t>(mesh_->n_vertices()))
    throw InvalidArgument("one nodal value per vertex required");
}

Point PwLinearField::gradient(Index k) const {
  auto e = mesh_->element(k);
  if (mesh_->dim() == 1) return {(values_[e[1]] - values_[e[0]]) / mesh_->measure(k), 0.0};
  const Point a = mesh_->vertex(e[0]);
  const Point e1 = mesh_->vertex(e[1]) - a, e2 = mesh_->vertex(e[2]) - a;
  const double d1 = values_[e[1]] - values_[e[0]], d2 = values_[e[2]] - values_[e[0]];
  const double det = cross(e1, e2);
  return {(d1 * e2.y - d2 * e1.y) / det, (e1.x * d2 - e2.x * d1) / det};
}

double PwLinearField::evaluate(const Location& loc) const {
  auto e = mesh_->element(loc.element);
  double v = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) v += loc.barycentric[i] * values_[e[i]];
  return v;
}

double PwLinearField::evaluate(Point p) const { return evaluate(locate(*mesh_, p)); }

QuadratureLayout quadrature_layout(const SimplicialMesh& mesh) {
  QuadratureLayout q;
  const Index ne = mesh.n_elements();
  if (mesh.dim() == 1) {
    const auto& g = quadrature::gauss_legendre(5);
    q.points_per_element = 5;
    q.points.reserve(5 * ne);
    q.weights.reserve(5 * ne);
    q.shape.reserve(10 * ne);
    for (Index k = 0; k < ne; ++k) {
      const double a = mesh.vertex(k).x, len = mesh.measure(k);
      for (int i = 0; i < 5; ++i) {
        const double t = g.nodes[i];
        q.points.push_back({a + t * len, 0.0});
        q.weights.push_back(g.weights[i] * len);
        q.shape.push_back(1.0 - t);
        q.shape.push_back(t);
      }
    }
    return q;
  }
  const auto& r = quadrature::triangle_degree4();
  const int n = static_cast<int>(r.weights.size());
  q.points_per_element = n;
  q.points.reserve(n * ne);
  q.weights.reserve(n * ne);
  q.shape.reserve(3 * n * ne);
  for (Index k = 0; k < ne; ++k) {
    auto e = mesh.element(k);
    const Point a = mesh.vertex(e[0]), b = mesh.vertex(e[1]), c = mesh.vertex(e[2]);
    for (int i = 0; i < n; ++i) {
      const auto& l = r.barycentric[i];
      q.points.push_back(l[0] * a + l[1] * b + l[2] * c);
      q.weights.push_back(r.weights[i] * mesh.measure(k));
      q.shape.insert(q.shape.end(), {l[0], l[1], l[2]});
    }
  }
  return q;
}

namespace {

// Element stiffness (s x s, row-major) and load (s) for element k.
struct ElementContribution {
  double stiffness[9];
  double load[3];
};

std::vector<ElementContribution> element_contributions(const SimplicialMesh& mesh, const QuadratureLayout& quad,
                                                      std::span<const double> kappa_q, std::span<const double> f_q) {
  const Index ne = mesh.n_elements();
  const int s = mesh.vertices_per_element();
  const int nq = quad.points_per_element;
  if (kappa_q.size() != quad.points.size() || f_q.size() != quad.points.size())
    throw InvalidArgument("coefficient arrays do not match the quadrature layout");
  std::vector<ElementContribution> out(ne);
  for (Index k = 0; k < ne; ++k) {
    double kappa_int = 0.0;
    ElementContribution& c = out[k];
    std::fill(std::begin(c.load), std::end(c.load), 0.0);
    for (int q = 0; q < nq; ++q) {
      const std::size_t iq = static_cast<std::size_t>(k) * nq + q;
      const double kv = kappa_q[iq];
      if (!(kv > 0.0) || !std::isfinite(kv))
        throw AssemblyError("coefficient is not positive at a quadrature point of element " + std::to_string(k));
      kappa_int += quad.weights[iq] * kv;
      for (int a = 0; a < s; ++a) c.load[a] += quad.weights[iq] * f_q[iq] * quad.shape[iq * s + a];
    }
    // gradients of the barycentric basis
    Point grad[3];
    auto e = mesh.element(k);
    if (s == 2) {
      const double len = mesh.measure(k);
      grad[0] = {-1.0 / len, 0.0};
      grad[1] = {1.0 / len, 0.0};
    } else {
      const double det = 2.0 * mesh.measure(k);
      for (int a = 0; a < 3; ++a) {
        const Point p = mesh.vertex(e[(a + 1) % 3]), r = mesh.vertex(e[(a + 2) % 3]);
        grad[a] = {(p.y - r.y) / det, (r.x - p.x) / det};
      }
    }
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) c.stiffness[a * s + b] = kappa_int * dot(grad[a], grad[b]);
  }
  return out;
}

std::vector<double> boundary_vector(const SimplicialMesh& mesh, std::span<const double> boundary_values) {
  std::vector<double> g(mesh.n_vertices(), 0.0);
  if (boundary_values.empty()) return g;
  if (boundary_values.size() != g.size()) throw InvalidArgument("boundary values need one entry per vertex");
  for (Index i = 0; i < mesh.n_vertices(); ++i)
    if (mesh.on_boundary(i)) g[i] = boundary_values[i];
  return g;
}

std::vector<double> solve_tridiagonal(const SimplicialMesh& mesh, const std::vector<ElementContribution>& ec,
                                      std::vector<double> u) {
  const Index n = mesh.n_vertices();
  const Index m = n - 2;  // interior unknowns 1..n-2
  std::vector<double> diag(m, 0.0), off(m, 0.0), rhs(m, 0.0);
  for (Index k = 0; k + 1 < n; ++k) {
    const auto& c = ec[k];
    // local 0 -> vertex k, local 1 -> vertex k + 1
    if (k >= 1) {
      diag[k - 1] += c.stiffness[0];
      rhs[k - 1] += c.load[0];
    }
    if (k + 1 <= n - 2) {
      diag[k] += c.stiffness[3];
      rhs[k] += c.load[1];
    }
    if (k >= 1 && k + 1 <= n - 2) off[k - 1] = c.stiffness[1];
    if (k == 0) rhs[0] -= c.stiffness[2] * u[0];
    if (k + 1 == n - 1) rhs[m - 1] -= c.stiffness[1] * u[n - 1];
  }
  // Thomas elimination; a non-positive pivot means the matrix is not SPD.
  for (Index i = 1; i < m; ++i) {
    if (!(diag[i - 1] > 0.0)) throw AssemblyError("stiffness matrix is not positive definite");
    const double w = off[i - 1] / diag[i - 1];
    diag[i] -= w * off[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  if (!(diag[m - 1] > 0.0)) throw AssemblyError("stiffness matrix is not positive definite");
  u[m] = rhs[m - 1] / diag[m - 1];
  for (Index i = m - 2; i >= 0; --i) u[i + 1] = (rhs[i] - off[i] * u[i + 2]) / diag[i];
  return u;
}

std::vector<double> solve_sparse(const SimplicialMesh& mesh, const std::vector<ElementContribution>& ec,
                                 std::vector<double> u) {
  const Index n = mesh.n_vertices();
  std::vector<Index> dof(n, -1);
  Index m = 0;
  for (Index i = 0; i < n; ++i)
    if (!mesh.on_boundary(i)) dof[i] = m++;
  if (m == 0) return u;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * ec.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    auto e = mesh.element(k);
    const auto& c = ec[k];
    for (int a = 0; a < 3; ++a) {
      const Index ia = dof[e[a]];
      if (ia < 0) continue;
      rhs[ia] += c.load[a];
      for (int b = 0; b < 3; ++b) {
        const Index ib = dof[e[b]];
        if (ib >= 0)
          triplets.emplace_back(ia, ib, c.stiffness[a * 3 + b]);
        else
          rhs[ia] -= c.stiffness[a * 3 + b] * u[e[b]];
      }
    }
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd x;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    x = llt.solve(rhs);
    ok = llt.info() == Eigen::Success && x.allFinite();
  }
  if (!ok) {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-12);
    cg.setMaxIterations(std::max<Index>(1000, 10 * m));
    cg.compute(A);
    x = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw NumericalError("conjugate gradient did not converge", cg.error());
  }
  for (Index i = 0; i < n; ++i)
    if (dof[i] >= 0) u[i] = x[dof[i]];
  return u;
}

}  // namespace

Assembly assemble(const SimplicialMesh& mesh, const QuadratureLayout& quad, std::span<const double> kappa_q,
                  std::span<const double> f_q) {
  const auto ec = element_contributions(mesh, quad, kappa_q, f_q);
  const int s = mesh.vertices_per_element();
  std::vector<Eigen::Triplet<double>> triplets;
  Assembly out;
  out.load = Eigen::VectorXd::Zero(mesh.n_vertices());
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    auto e = mesh.element(k);
    for (int a = 0; a < s; ++a) {
      out.load[e[a]] += ec[k].load[a];
      for (int b = 0; b < s; ++b) triplets.emplace_back(e[a], e[b], ec[k].stiffness[a * s + b]);
    }
  }
  out.stiffness.resize(mesh.n_vertices(), mesh.n_vertices());
  out.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

PwLinearField solve_with_quadrature_values(const MeshPtr& mesh, const QuadratureLayout& quad,
                                           std::span<const double> kappa_q, std::span<const double> f_q,
                                           std::span<const double> boundary_values) {
  const auto ec = element_contributions(*mesh, quad, kappa_q, f_q);
  std::vector<double> u = boundary_vector(*mesh, boundary_values);
  u = mesh->dim() == 1 ? solve_tridiagonal(*mesh, ec, std::move(u)) : solve_sparse(*mesh, ec, std::move(u));
  return PwLinearField(mesh, std::move(u));
}

PwLinearField solve(const EllipticProblem& problem, const MeshPtr& mesh) {
  if (!problem.kappa || !problem.f) throw InvalidArgument("problem needs kappa and f");
  const QuadratureLayout quad = quadrature_layout(*mesh);
  std::vector<double> kq(quad.points.size()), fq(quad.points.size());
  for (std::size_t i = 0; i < quad.points.size(); ++i) {
    kq[i] = problem.kappa(quad.points[i]);
    fq[i] = problem.f(quad.points[i]);
  }
  std::vector<double> g;
  if (problem.dirichlet) {
    g.assign(mesh->n_vertices(), 0.0);
    for (Index i = 0; i < mesh->n_vertices(); ++i)
      if (mesh->on_boundary(i)) g[i] = problem.dirichlet(mesh->vertex(i));
  }
  return solve_with_quadrature_values(mesh, quad, kq, fq, g);
}

std::vector<double> displaced_value_increments(const PwLinearField& field, std::span<const Point> delta) {
  const SimplicialMesh& mesh = *field.mesh();
  if (delta.size() != static_cast<std::size_t>(mesh.n_vertices())) throw InvalidArgument("displacement size");
  std::vector<double> w(mesh.n_vertices(), 0.0);
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    const Point d = delta[i];
    if (d.x == 0.0 && d.y == 0.0) continue;
    if (mesh.dim() == 1) {
      const Index k = d.x < 0.0 ? i - 1 : i;
      const bool inside = k >= 0 && k < mesh.n_elements() && std::abs(d.x) <= mesh.measure(k);
      if (inside) {
        w[i] = d.x * field.gradient(k).x;
        continue;
      }
    } else {
      bool found = false;
      for (Index k : mesh.patch(i)) {
        auto e = mesh.element(k);
        int l = 0;
        while (e[l] != i) ++l;
        const Index a = e[(l + 1) % 3], b = e[(l + 2) % 3];
        const Point ea = mesh.vertex(a) - mesh.vertex(i), eb = mesh.vertex(b) - mesh.vertex(i);
        const double det = cross(ea, eb);
        const double la = cross(d, eb) / det, lb = cross(ea, d) / det;
        if (la >= 0.0 && lb >= 0.0 && la + lb <= 1.0) {
          w[i] = la * (field.value(a) - field.value(i)) + lb * (field.value(b) - field.value(i));
          found = true;
          break;
        }
      }
      if (found) continue;
    }
    w[i] = field.evaluate(mesh.vertex(i) + d) - field.value(i);
  }
  return w;
}

PwLinearField interpolate(const PwLinearField& field, const PerturbedMesh& target, InterpolationRule rule) {
  if (!field.mesh()->shares_topology(*target.mesh()))
    throw InvalidArgument("perturbed mesh was not derived from the field's mesh");
  if (rule == InterpolationRule::CarryNodalValues) return PwLinearField(target.mesh(), field.values());
  std::vector<double> v = field.values();
  const std::vector<double> w = displaced_value_increments(field, target.displacement());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  return PwLinearField(target.mesh(), std::move(v));
}

double h1_seminorm(const PwLinearField& field) {
  const auto& mesh = *field.mesh();
  double s = 0.0;
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    const Point g = field.gradient(k);
    s += mesh.measure(k) * dot(g, g);
  }
  return std::sqrt(s);
}

double l2_norm(const PwLinearField& field) {
  // Exact for P1: |K| / (d+1)(d+2) * (sum v_i^2 + (sum v_i)^2).
  const auto& mesh = *field.mesh();
  const int s = mesh.vertices_per_element();
  const double c = 1.0 / (s * (s + 1));
  double total = 0.0;
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    double sq = 0.0, sum = 0.0;
    for (Index v : mesh.element(k)) {
      sq += field.value(v) * field.value(v);
      sum += field.value(v);
    }
    total += mesh.measure(k) * c * (sq + sum * sum);
  }
  return std::sqrt(total);
}

ErrorNorms error_norms(const PwLinearField& field, const ScalarFunction& exact_u, const VectorFunction& exact_grad,
                       int quad_order) {
  const auto& mesh = *field.mesh();
  double h1 = 0.0, l2 = 0.0;
  if (mesh.dim() == 1) {
    const auto& g = quadrature::gauss_legendre(quad_order);
    for (Index k = 0; k < mesh.n_elements(); ++k) {
      const double a = mesh.vertex(k).x, len = mesh.measure(k);
      const double va = field.value(k), vb = field.value(k + 1);
      const double slope = (vb - va) / len;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double t = g.nodes[i];
        const Point x{a + t * len, 0.0};
        const double du = (exact_grad ? exact_grad(x).x : 0.0) - slope;
        const double eu = (exact_u ? exact_u(x) : 0.0) - ((1.0 - t) * va + t * vb);
        h1 += g.weights[i] * len * du * du;
        l2 += g.weights[i] * len * eu * eu;
      }
    }
  } else {
    const auto r = quadrature::triangle_collapsed(quad_order);
    for (Index k = 0; k < mesh.n_elements(); ++k) {
      auto e = mesh.element(k);
      const Point p0 = mesh.vertex(e[0]), p1 = mesh.vertex(e[1]), p2 = mesh.vertex(e[2]);
      const Point gh = field.gradient(k);
      for (std::size_t i = 0; i < r.weights.size(); ++i) {
        const auto& l = r.barycentric[i];
        const Point x = l[0] * p0 + l[1] * p1 + l[2] * p2;
        const Point d = (exact_grad ? exact_grad(x) : Point{}) - gh;
        const double uh = l[0] * field.value(e[0]) + l[1] * field.value(e[1]) + l[2] * field.value(e[2]);
        const double eu = (exact_u ? exact_u(x) : 0.0) - uh;
        h1 += r.weights[i] * mesh.measure(k) * dot(d, d);
        l2 += r.weights[i] * mesh.measure(k) * eu * eu;
      }
    }
  }
  return {std::sqrt(h1), std::sqrt(l2)};
}

std::vector<double> supermesh_1d(const SimplicialMesh& a, const SimplicialMesh& b) {
  if (a.dim() != 1 || b.dim() != 1) throw Unsupported("supermesh_1d needs 1D meshes");
  std::vector<double> xa(a.n_vertices()), xb(b.n_vertices()), out;
  for (Index i = 0; i < a.n_vertices(); ++i) xa[i] = a.vertex(i).x;
  for (Index i = 0; i < b.n_vertices(); ++i) xb[i] = b.vertex(i).x;
  out.reserve(xa.size() + xb.size());
  std::set_union(xa.begin(), xa.end(), xb.begin(), xb.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double h1_distance_1d(const PwLinearField& a, const PwLinearField& b) {
  const auto& ma = *a.mesh();
  const auto& mb = *b.mesh();
  const std::vector<double> x = supermesh_1d(ma, mb);
  double s = 0.0;
  Index ia = 0, ib = 0;
  for (std::size_t j = 0; j + 1 < x.size(); ++j) {
    const double mid = 0.5 * (x[j] + x[j + 1]);
    while (ia + 1 < ma.n_elements() && ma.vertex(ia + 1).x <= mid) ++ia;
    while (ib + 1 < mb.n_elements() && mb.vertex(ib + 1).x <= mid) ++ib;
    const double d = a.gradient(ia).x - b.gradient(ib).x;
    s += (x[j + 1] - x[j]) * d * d;
  }
  return std::sqrt(s);
}

}  // namespace rmfem

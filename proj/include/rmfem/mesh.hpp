#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rmfem/types.hpp"

namespace rmfem {

/// Connectivity shared between a reference mesh and its perturbations.
struct Topology {
  int dim = 1;
  std::vector<Index> elements;  // flat, stride dim + 1
  std::vector<bool> boundary;   // per vertex
  std::vector<Index> patch_offsets;
  std::vector<Index> patch_elements;
  // neighbors[k * (dim + 1) + i]: element across the facet opposite local vertex i, or -1.
  std::vector<Index> neighbors;
};

/// Conforming simplicial mesh in 1D or 2D. Immutable after construction.
///
/// 1D meshes are kept in canonical form: vertices sorted by x and element k
/// joining vertices k and k + 1. 2D elements are counter-clockwise.
class SimplicialMesh {
 public:
  /// Validates conformity; throws InvalidArgument when the data is not a conforming mesh.
  static SimplicialMesh from_data(int dim, std::vector<Point> vertices, std::vector<Index> elements);

  /// Same connectivity, new coordinates. Throws InvariantViolation if an element degenerates or flips.
  SimplicialMesh with_vertices(std::vector<Point> vertices) const;

  int dim() const { return topo_->dim; }
  Index n_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index n_elements() const { return static_cast<Index>(diam_.size()); }
  int vertices_per_element() const { return topo_->dim + 1; }

  Point vertex(Index i) const { return vertices_[i]; }
  const std::vector<Point>& vertices() const { return vertices_; }
  std::span<const Index> element(Index k) const {
    const int s = vertices_per_element();
    return {topo_->elements.data() + static_cast<std::size_t>(k) * s, static_cast<std::size_t>(s)};
  }
  const std::vector<Index>& elements() const { return topo_->elements; }
  /// Element across the facet opposite local vertex i, or -1 on the boundary.
  Index neighbor(Index k, int i) const { return topo_->neighbors[k * vertices_per_element() + i]; }

  bool on_boundary(Index i) const { return topo_->boundary[i]; }
  const std::vector<bool>& boundary_mask() const { return topo_->boundary; }
  std::span<const Index> patch(Index i) const {
    const Index b = topo_->patch_offsets[i];
    const Index e = topo_->patch_offsets[i + 1];
    return {topo_->patch_elements.data() + b, static_cast<std::size_t>(e - b)};
  }

  double element_diam(Index k) const { return diam_[k]; }
  const std::vector<double>& element_diams() const { return diam_; }
  double h() const { return h_; }
  /// Length in 1D, area in 2D.
  double measure(Index k) const { return measure_[k]; }
  double total_measure() const;
  Point centroid(Index k) const;

  bool shares_topology(const SimplicialMesh& other) const { return topo_ == other.topo_; }
  const std::shared_ptr<const Topology>& topology() const { return topo_; }

 private:
  SimplicialMesh(std::shared_ptr<const Topology> topo, std::vector<Point> vertices);
  void compute_geometry();

  std::shared_ptr<const Topology> topo_;
  std::vector<Point> vertices_;
  std::vector<double> diam_;
  std::vector<double> measure_;
  double h_ = 0.0;
};

using MeshPtr = std::shared_ptr<const SimplicialMesh>;

SimplicialMesh build_uniform_1d(int n_elements, double a = 0.0, double b = 1.0);
/// Sorts the points; throws InvalidArgument on duplicates or fewer than 3 points.
SimplicialMesh build_from_points_1d(std::vector<double> points);
/// Unit square, n x n cells, each split along the (0,0)-(1,1) diagonal.
SimplicialMesh build_structured_2d(int n_per_side);
/// (-1,1)^2 without the closed quadrant [-1,0]^2 interior, n cells per unit length.
SimplicialMesh build_lshape_2d(int n_per_side);

/// Max diameter ratio over pairs of elements sharing a facet.
double quasi_uniformity(const SimplicialMesh& mesh);

/// 1D: bisect marked intervals. 2D: newest-vertex bisection with conformity closure.
/// The first local edge (vertices 0-1) of each triangle is its refinement edge.
SimplicialMesh refine(const SimplicialMesh& mesh, std::span<const Index> marked);

/// Removes marked interior vertices; of two adjacent marked vertices only the left one goes.
SimplicialMesh coarsen_1d(const SimplicialMesh& mesh, std::span<const Index> marked);

struct Location {
  Index element = -1;
  std::array<double, 3> barycentric{};  // first dim + 1 entries used
};

/// Throws OutOfDomain if the point is farther than 1e-12 from every element.
Location locate(const SimplicialMesh& mesh, Point p);

/// Throws InvalidArgument describing the first violated invariant.
void check_conformity(const SimplicialMesh& mesh);

// ---------------------------------------------------------------------------
// Random perturbation

enum class RadialLaw {
  UniformBall,   // uniform on the ball of the given radius
  Shell,         // uniform on the sphere |a| = radius
  Concentrated,  // |a| = radius * u^2, u uniform; mass near the origin
};

/// What identifies a vertex's random substream.
enum class StreamKey {
  VertexIndex,     // (seed, realization, vertex index)
  VertexPosition,  // (seed, realization, coordinate bits): draws follow a vertex across remeshing
};

struct PerturbationConfig {
  double p = 1.0;
  double radius = 0.5;
  bool include_boundary = false;
  std::uint64_t seed = 0;
  RadialLaw law = RadialLaw::UniformBall;
  StreamKey stream_key = StreamKey::VertexIndex;

  void validate() const;
};

/// E|a| and E|a|^2 of the radial law in the given dimension.
struct LawMoments {
  double mean_abs = 0.0;
  double mean_sq = 0.0;
};
LawMoments law_moments(RadialLaw law, int dim, double radius);

/// One draw of the unscaled vectors a_i for every vertex (zero where the vertex is not moved).
std::vector<Point> draw_alphas(const SimplicialMesh& mesh, const PerturbationConfig& config,
                               std::uint64_t realization);

/// Element size used to scale perturbations: the length in 1D, the radius of the smallest
/// disk containing the triangle in 2D.
std::vector<double> element_sizes(const SimplicialMesh& mesh);

/// Per-vertex length scale of the perturbation: the smallest element size over the patch.
std::vector<double> perturbation_scales(const SimplicialMesh& mesh);

/// Vertex displacements h_bar_i^p a_i, with boundary handling applied.
std::vector<Point> displacements_from_alphas(const SimplicialMesh& mesh, const PerturbationConfig& config,
                                            std::span<const Point> alphas);

class PerturbedMesh {
 public:
  PerturbedMesh(MeshPtr reference, std::vector<Point> displacement, double p);

  const MeshPtr& reference() const { return reference_; }
  const MeshPtr& mesh() const { return mesh_; }
  const std::vector<Point>& displacement() const { return displacement_; }
  Point displacement(Index i) const { return displacement_[i]; }
  double p() const { return p_; }

 private:
  MeshPtr reference_;
  MeshPtr mesh_;
  std::vector<Point> displacement_;
  double p_;
};

/// Realization `realization` of the random mesh; a pure function of (mesh, config, realization).
PerturbedMesh perturb(const MeshPtr& mesh, const PerturbationConfig& config, std::uint64_t realization);
PerturbedMesh perturb_with_alphas(const MeshPtr& mesh, const PerturbationConfig& config,
                                  std::span<const Point> alphas);

}  // namespace rmfem

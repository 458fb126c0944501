#include "rmfem/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "rmfem/random.hpp"

namespace rmfem {
namespace {

constexpr double kLocateTol = 1e-12;

std::uint64_t edge_key(Index a, Index b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

double signed_area(Point a, Point b, Point c) { return 0.5 * cross(b - a, c - a); }

void build_patches(Topology& t, Index n_vertices) {
  const int s = t.dim + 1;
  const Index n_elements = static_cast<Index>(t.elements.size() / s);
  t.patch_offsets.assign(n_vertices + 1, 0);
  for (Index v : t.elements) ++t.patch_offsets[v + 1];
  std::partial_sum(t.patch_offsets.begin(), t.patch_offsets.end(), t.patch_offsets.begin());
  t.patch_elements.assign(t.elements.size(), 0);
  std::vector<Index> fill(t.patch_offsets.begin(), t.patch_offsets.end() - 1);
  for (Index k = 0; k < n_elements; ++k)
    for (int i = 0; i < s; ++i) t.patch_elements[fill[t.elements[k * s + i]]++] = k;
}

}  // namespace

SimplicialMesh::SimplicialMesh(std::shared_ptr<const Topology> topo, std::vector<Point> vertices)
    : topo_(std::move(topo)), vertices_(std::move(vertices)) {}

SimplicialMesh SimplicialMesh::from_data(int dim, std::vector<Point> vertices, std::vector<Index> elements) {
  if (dim != 1 && dim != 2) throw InvalidArgument("mesh dimension must be 1 or 2");
  const int s = dim + 1;
  if (elements.empty() || elements.size() % s != 0)
    throw InvalidArgument("element array length is not a positive multiple of dim + 1");
  const Index nv = static_cast<Index>(vertices.size());
  const Index ne = static_cast<Index>(elements.size() / s);
  for (Index v : elements)
    if (v < 0 || v >= nv) throw InvalidArgument("element references vertex " + std::to_string(v) + " out of range");

  auto topo = std::make_shared<Topology>();
  topo->dim = dim;
  topo->boundary.assign(nv, false);
  topo->neighbors.assign(elements.size(), -1);

  if (dim == 1) {
    if (ne != nv - 1) throw InvalidArgument("1D mesh must have n_vertices - 1 elements");
    for (Index k = 0; k < ne; ++k) {
      if (elements[2 * k] != k || elements[2 * k + 1] != k + 1)
        throw InvalidArgument("1D elements must join consecutive sorted vertices");
      if (!(vertices[k + 1].x > vertices[k].x)) throw InvalidArgument("1D vertices are not strictly increasing");
      if (k + 1 < ne) topo->neighbors[2 * k] = k + 1;
      if (k > 0) topo->neighbors[2 * k + 1] = k - 1;
    }
    for (Point& p : vertices)
      if (p.y != 0.0) throw InvalidArgument("1D vertices must have y = 0");
    topo->boundary.front() = true;
    topo->boundary.back() = true;
  } else {
    std::unordered_map<std::uint64_t, std::pair<Index, int>> first_owner;
    std::unordered_map<std::uint64_t, int> count;
    first_owner.reserve(elements.size());
    count.reserve(elements.size());
    for (Index k = 0; k < ne; ++k) {
      const Index* t = elements.data() + 3 * k;
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw InvalidArgument("degenerate triangle");
      if (!(signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > 0.0))
        throw InvalidArgument("triangle " + std::to_string(k) + " is not positively oriented");
      for (int i = 0; i < 3; ++i) {
        const std::uint64_t key = edge_key(t[(i + 1) % 3], t[(i + 2) % 3]);
        const int c = ++count[key];
        if (c == 1) {
          first_owner.emplace(key, std::pair{k, i});
        } else if (c == 2) {
          auto [k0, i0] = first_owner.at(key);
          topo->neighbors[3 * k + i] = k0;
          topo->neighbors[3 * k0 + i0] = k;
        } else {
          throw InvalidArgument("edge shared by more than two triangles");
        }
      }
    }
    for (Index k = 0; k < ne; ++k)
      for (int i = 0; i < 3; ++i)
        if (topo->neighbors[3 * k + i] < 0) {
          topo->boundary[elements[3 * k + (i + 1) % 3]] = true;
          topo->boundary[elements[3 * k + (i + 2) % 3]] = true;
        }
  }
  topo->elements = std::move(elements);
  build_patches(*topo, nv);
  for (Index v = 0; v < nv; ++v)
    if (topo->patch_offsets[v + 1] == topo->patch_offsets[v])
      throw InvalidArgument("vertex " + std::to_string(v) + " belongs to no element");

  SimplicialMesh mesh(std::move(topo), std::move(vertices));
  mesh.compute_geometry();
  return mesh;
}

SimplicialMesh SimplicialMesh::with_vertices(std::vector<Point> vertices) const {
  if (vertices.size() != vertices_.size()) throw InvalidArgument("vertex count mismatch");
  SimplicialMesh mesh(topo_, std::move(vertices));
  mesh.compute_geometry();
  return mesh;
}

void SimplicialMesh::compute_geometry() {
  const Index ne = static_cast<Index>(topo_->elements.size() / vertices_per_element());
  diam_.resize(ne);
  measure_.resize(ne);
  h_ = 0.0;
  for (Index k = 0; k < ne; ++k) {
    auto e = element(k);
    if (dim() == 1) {
      const double len = vertices_[e[1]].x - vertices_[e[0]].x;
      if (!(len > 0.0)) throw InvariantViolation("interval " + std::to_string(k) + " has non-positive length");
      diam_[k] = len;
      measure_[k] = len;
    } else {
      const Point a = vertices_[e[0]], b = vertices_[e[1]], c = vertices_[e[2]];
      const double area = signed_area(a, b, c);
      if (!(area > 0.0)) throw InvariantViolation("triangle " + std::to_string(k) + " is inverted or degenerate");
      diam_[k] = std::max({norm(b - a), norm(c - b), norm(a - c)});
      measure_[k] = area;
    }
    h_ = std::max(h_, diam_[k]);
  }
}

double SimplicialMesh::total_measure() const {
  return std::accumulate(measure_.begin(), measure_.end(), 0.0);
}

Point SimplicialMesh::centroid(Index k) const {
  Point c;
  for (Index v : element(k)) c = c + vertices_[v];
  return (1.0 / vertices_per_element()) * c;
}

// ---------------------------------------------------------------------------

SimplicialMesh build_uniform_1d(int n_elements, double a, double b) {
  if (n_elements < 2) throw InvalidArgument("build_uniform_1d: need at least 2 elements");
  if (!(b > a)) throw InvalidArgument("build_uniform_1d: empty interval");
  std::vector<double> x(n_elements + 1);
  for (int i = 0; i <= n_elements; ++i) x[i] = a + (b - a) * i / n_elements;
  x.back() = b;
  return build_from_points_1d(std::move(x));
}

SimplicialMesh build_from_points_1d(std::vector<double> points) {
  if (points.size() < 3) throw InvalidArgument("1D mesh needs at least 3 points");
  std::sort(points.begin(), points.end());
  if (std::adjacent_find(points.begin(), points.end()) != points.end())
    throw InvalidArgument("duplicate 1D mesh points");
  std::vector<Point> v(points.size());
  std::vector<Index> e;
  e.reserve(2 * (points.size() - 1));
  for (std::size_t i = 0; i < points.size(); ++i) v[i] = {points[i], 0.0};
  for (Index k = 0; k + 1 < static_cast<Index>(points.size()); ++k) {
    e.push_back(k);
    e.push_back(k + 1);
  }
  return SimplicialMesh::from_data(1, std::move(v), std::move(e));
}

namespace {

// Grid of cells [x0 + i d, ...] x [y0 + j d, ...]; keep(i, j) selects cells.
template <class Keep>
SimplicialMesh build_grid(int nx, int ny, double x0, double y0, double d, Keep keep) {
  std::vector<Index> id((nx + 1) * (ny + 1), -1);
  std::vector<Point> v;
  std::vector<Index> e;
  auto vid = [&](int i, int j) {
    Index& slot = id[j * (nx + 1) + i];
    if (slot < 0) {
      slot = static_cast<Index>(v.size());
      v.push_back({x0 + i * d, y0 + j * d});
    }
    return slot;
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!keep(i, j)) continue;
      const Index a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), dd = vid(i, j + 1);
      e.insert(e.end(), {c, a, b});
      e.insert(e.end(), {a, c, dd});
    }
  }
  return SimplicialMesh::from_data(2, std::move(v), std::move(e));
}

}  // namespace

SimplicialMesh build_structured_2d(int n_per_side) {
  if (n_per_side < 2) throw InvalidArgument("build_structured_2d: need n_per_side >= 2");
  return build_grid(n_per_side, n_per_side, 0.0, 0.0, 1.0 / n_per_side, [](int, int) { return true; });
}

SimplicialMesh build_lshape_2d(int n_per_side) {
  if (n_per_side < 2) throw InvalidArgument("build_lshape_2d: need n_per_side >= 2");
  const int n = n_per_side;
  return build_grid(2 * n, 2 * n, -1.0, -1.0, 1.0 / n, [n](int i, int j) { return i >= n || j >= n; });
}

double quasi_uniformity(const SimplicialMesh& mesh) {
  double lambda = 1.0;
  const int s = mesh.vertices_per_element();
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    for (int i = 0; i < s; ++i) {
      const Index j = mesh.neighbor(k, i);
      if (j < 0) continue;
      lambda = std::max(lambda, mesh.element_diam(k) / mesh.element_diam(j));
    }
  }
  return lambda;
}

void check_conformity(const SimplicialMesh& mesh) {
  // from_data performs all checks; rebuilding is the simplest independent re-verification.
  std::vector<Index> elements = mesh.elements();
  SimplicialMesh rebuilt = SimplicialMesh::from_data(mesh.dim(), mesh.vertices(), std::move(elements));
  if (rebuilt.boundary_mask() != mesh.boundary_mask()) throw InvalidArgument("boundary mask inconsistent with edges");
}

// ---------------------------------------------------------------------------

namespace {

SimplicialMesh refine_1d(const SimplicialMesh& mesh, std::span<const Index> marked) {
  std::vector<bool> mark(mesh.n_elements(), false);
  for (Index k : marked) {
    if (k < 0 || k >= mesh.n_elements()) throw InvalidArgument("marked element out of range");
    mark[k] = true;
  }
  std::vector<double> x;
  x.reserve(mesh.n_vertices() + marked.size());
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    const double a = mesh.vertex(k).x, b = mesh.vertex(k + 1).x;
    x.push_back(a);
    if (mark[k]) x.push_back(0.5 * (a + b));
  }
  x.push_back(mesh.vertex(mesh.n_vertices() - 1).x);
  return build_from_points_1d(std::move(x));
}

SimplicialMesh refine_2d(const SimplicialMesh& mesh, std::span<const Index> marked) {
  const Index ne = mesh.n_elements();
  std::unordered_set<std::uint64_t> edges;
  std::vector<Index> work;
  auto mark_edge = [&](Index k) {
    // refinement edge of k is local 0-1, opposite local vertex 2
    auto t = mesh.element(k);
    if (edges.insert(edge_key(t[0], t[1])).second) {
      const Index nb = mesh.neighbor(k, 2);
      if (nb >= 0) work.push_back(nb);
    }
  };
  for (Index k : marked) {
    if (k < 0 || k >= ne) throw InvalidArgument("marked element out of range");
    mark_edge(k);
  }
  if (edges.empty()) return mesh;
  // Closure: any triangle with a marked edge must also bisect its refinement edge.
  for (Index k = 0; k < ne; ++k) work.push_back(k);
  while (!work.empty()) {
    const Index k = work.back();
    work.pop_back();
    auto t = mesh.element(k);
    if (edges.count(edge_key(t[0], t[1]))) continue;
    if (edges.count(edge_key(t[1], t[2])) || edges.count(edge_key(t[2], t[0]))) {
      mark_edge(k);
    }
  }

  std::vector<Point> v = mesh.vertices();
  std::unordered_map<std::uint64_t, Index> midpoint;
  auto mid = [&](Index a, Index b) {
    const std::uint64_t key = edge_key(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Index m = static_cast<Index>(v.size());
    v.push_back(0.5 * (v[a] + v[b]));
    midpoint.emplace(key, m);
    return m;
  };
  std::vector<Index> out;
  out.reserve(mesh.elements().size() + 6 * edges.size());
  std::vector<std::array<Index, 3>> stack;
  for (Index k = 0; k < ne; ++k) {
    auto t = mesh.element(k);
    stack.push_back({t[0], t[1], t[2]});
    while (!stack.empty()) {
      const auto [a, b, c] = stack.back();
      stack.pop_back();
      if (edges.count(edge_key(a, b))) {
        const Index m = mid(a, b);
        stack.push_back({c, a, m});
        stack.push_back({b, c, m});
      } else {
        out.insert(out.end(), {a, b, c});
      }
    }
  }
  return SimplicialMesh::from_data(2, std::move(v), std::move(out));
}

}  // namespace

SimplicialMesh refine(const SimplicialMesh& mesh, std::span<const Index> marked) {
  return mesh.dim() == 1 ? refine_1d(mesh, marked) : refine_2d(mesh, marked);
}

SimplicialMesh coarsen_1d(const SimplicialMesh& mesh, std::span<const Index> marked) {
  if (mesh.dim() != 1) throw Unsupported("coarsening is implemented for 1D meshes only");
  std::vector<bool> mark(mesh.n_vertices(), false);
  for (Index v : marked) {
    if (v <= 0 || v >= mesh.n_vertices() - 1) throw InvalidArgument("coarsening mark is not an interior vertex");
    mark[v] = true;
  }
  std::vector<double> x;
  bool removed_previous = false;
  for (Index v = 0; v < mesh.n_vertices(); ++v) {
    const bool remove = mark[v] && !removed_previous;
    if (!remove) x.push_back(mesh.vertex(v).x);
    removed_previous = remove;
  }
  return build_from_points_1d(std::move(x));
}

Location locate(const SimplicialMesh& mesh, Point p) {
  Location loc;
  if (mesh.dim() == 1) {
    const auto& v = mesh.vertices();
    const double x0 = v.front().x, x1 = v.back().x;
    if (p.x < x0 - kLocateTol || p.x > x1 + kLocateTol || std::abs(p.y) > kLocateTol)
      throw OutOfDomain("point outside the 1D mesh");
    auto it = std::lower_bound(v.begin(), v.end(), p.x, [](Point a, double x) { return a.x < x; });
    Index j = static_cast<Index>(it - v.begin());
    const Index k = std::clamp<Index>(j - 1, 0, mesh.n_elements() - 1);
    const double a = v[k].x, b = v[k + 1].x;
    const double t = std::clamp((p.x - a) / (b - a), 0.0, 1.0);
    loc.element = k;
    loc.barycentric = {1.0 - t, t, 0.0};
    return loc;
  }
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    auto t = mesh.element(k);
    const Point a = mesh.vertex(t[0]), b = mesh.vertex(t[1]), c = mesh.vertex(t[2]);
    const double area2 = cross(b - a, c - a);
    const std::array<double, 3> lam = {cross(b - p, c - p) / area2, cross(c - p, a - p) / area2,
                                       cross(a - p, b - p) / area2};
    const std::array<double, 3> edge = {norm(c - b), norm(a - c), norm(b - a)};
    bool inside = true;
    for (int i = 0; i < 3; ++i)
      if (-lam[i] * area2 / edge[i] > kLocateTol) inside = false;
    if (!inside) continue;
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      loc.barycentric[i] = std::clamp(lam[i], 0.0, 1.0);
      sum += loc.barycentric[i];
    }
    for (int i = 0; i < 3; ++i) loc.barycentric[i] /= sum;
    loc.element = k;
    return loc;
  }
  throw OutOfDomain("point outside the 2D mesh");
}

// ---------------------------------------------------------------------------

void PerturbationConfig::validate() const {
  if (!(p >= 1.0)) throw InvalidArgument("perturbation exponent p must be >= 1");
  if (!(radius > 0.0 && radius <= 0.5)) throw InvalidArgument("perturbation radius must lie in (0, 1/2]");
}

LawMoments law_moments(RadialLaw law, int dim, double r) {
  switch (law) {
    case RadialLaw::UniformBall:
      return dim == 1 ? LawMoments{r / 2.0, r * r / 3.0} : LawMoments{2.0 * r / 3.0, r * r / 2.0};
    case RadialLaw::Shell:
      return {r, r * r};
    case RadialLaw::Concentrated:
      return {r / 3.0, r * r / 5.0};
  }
  throw InvalidArgument("unknown radial law");
}

std::vector<Point> draw_alphas(const SimplicialMesh& mesh, const PerturbationConfig& config,
                               std::uint64_t realization) {
  config.validate();
  std::vector<Point> alpha(mesh.n_vertices());
  const bool boundary_moves = config.include_boundary && mesh.dim() == 2;
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    if (mesh.on_boundary(i) && !boundary_moves) continue;
    RandomStream rng = config.stream_key == StreamKey::VertexIndex
                           ? RandomStream(config.seed, {realization, static_cast<std::uint64_t>(i)})
                           : RandomStream(config.seed, {realization, std::bit_cast<std::uint64_t>(mesh.vertex(i).x),
                                                        std::bit_cast<std::uint64_t>(mesh.vertex(i).y)});
    const double u = rng.uniform();
    const double w = rng.uniform();
    double rho = 0.0;
    switch (config.law) {
      case RadialLaw::UniformBall:
        rho = mesh.dim() == 1 ? config.radius * u : config.radius * std::sqrt(u);
        break;
      case RadialLaw::Shell:
        rho = config.radius;
        break;
      case RadialLaw::Concentrated:
        rho = config.radius * u * u;
        break;
    }
    if (mesh.dim() == 1) {
      alpha[i] = {w < 0.5 ? -rho : rho, 0.0};
    } else {
      const double t = 2.0 * std::numbers::pi * w;
      alpha[i] = {rho * std::cos(t), rho * std::sin(t)};
    }
  }
  return alpha;
}

std::vector<double> element_sizes(const SimplicialMesh& mesh) {
  std::vector<double> size(mesh.n_elements());
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    if (mesh.dim() == 1) {
      size[k] = mesh.measure(k);
      continue;
    }
    auto t = mesh.element(k);
    std::array<double, 3> e = {norm(mesh.vertex(t[1]) - mesh.vertex(t[0])),
                               norm(mesh.vertex(t[2]) - mesh.vertex(t[1])),
                               norm(mesh.vertex(t[0]) - mesh.vertex(t[2]))};
    std::sort(e.begin(), e.end());
    // Smallest enclosing disk: half the longest edge unless the triangle is acute.
    if (e[2] * e[2] >= e[0] * e[0] + e[1] * e[1])
      size[k] = 0.5 * e[2];
    else
      size[k] = e[0] * e[1] * e[2] / (4.0 * mesh.measure(k));
  }
  return size;
}

std::vector<double> perturbation_scales(const SimplicialMesh& mesh) {
  const std::vector<double> size = element_sizes(mesh);
  std::vector<double> scale(mesh.n_vertices(), 0.0);
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    double s = std::numeric_limits<double>::infinity();
    for (Index k : mesh.patch(i)) s = std::min(s, size[k]);
    scale[i] = s;
  }
  return scale;
}

namespace {

// Outward unit normal of the straight boundary through vertex i; first = false at corners
// and at interior vertices.
std::vector<std::pair<bool, Point>> boundary_normals(const SimplicialMesh& mesh) {
  std::vector<std::vector<Point>> normals(mesh.n_vertices());
  for (Index k = 0; k < mesh.n_elements(); ++k) {
    auto t = mesh.element(k);
    for (int i = 0; i < 3; ++i) {
      if (mesh.neighbor(k, i) >= 0) continue;
      const Index a = t[(i + 1) % 3], b = t[(i + 2) % 3];
      const Point d = mesh.vertex(b) - mesh.vertex(a);
      // triangles are counter-clockwise, so the outward normal is to the right of a->b
      const Point n = (1.0 / norm(d)) * Point{d.y, -d.x};
      normals[a].push_back(n);
      normals[b].push_back(n);
    }
  }
  std::vector<std::pair<bool, Point>> out(mesh.n_vertices(), {false, Point{}});
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    const auto& n = normals[i];
    if (n.size() != 2) continue;
    if (std::abs(cross(n[0], n[1])) < 1e-10 && dot(n[0], n[1]) > 0.0) out[i] = {true, n[0]};
  }
  return out;
}

}  // namespace

std::vector<Point> displacements_from_alphas(const SimplicialMesh& mesh, const PerturbationConfig& config,
                                            std::span<const Point> alphas) {
  config.validate();
  if (alphas.size() != static_cast<std::size_t>(mesh.n_vertices()))
    throw InvalidArgument("one perturbation vector per vertex required");
  const std::vector<double> scale = perturbation_scales(mesh);
  const bool boundary_moves = config.include_boundary && mesh.dim() == 2;
  std::vector<std::pair<bool, Point>> normals;
  if (boundary_moves) normals = boundary_normals(mesh);
  std::vector<Point> delta(mesh.n_vertices());
  for (Index i = 0; i < mesh.n_vertices(); ++i) {
    if (mesh.on_boundary(i)) {
      if (!boundary_moves || !normals[i].first) continue;
    }
    const double s = std::pow(scale[i], config.p);
    Point d = s * alphas[i];
    if (mesh.on_boundary(i)) {
      const Point n = normals[i].second;
      const double out = dot(d, n);
      if (out > 0.0) d = d - (2.0 * out) * n;
    }
    delta[i] = d;
  }
  return delta;
}

PerturbedMesh::PerturbedMesh(MeshPtr reference, std::vector<Point> displacement, double p)
    : reference_(std::move(reference)), displacement_(std::move(displacement)), p_(p) {
  std::vector<Point> x = reference_->vertices();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] + displacement_[i];
  try {
    mesh_ = std::make_shared<const SimplicialMesh>(reference_->with_vertices(std::move(x)));
  } catch (const InvariantViolation& e) {
    throw InvariantViolation(std::string("perturbed mesh is not conforming: ") + e.what());
  }
}

PerturbedMesh perturb(const MeshPtr& mesh, const PerturbationConfig& config, std::uint64_t realization) {
  const std::vector<Point> alphas = draw_alphas(*mesh, config, realization);
  return perturb_with_alphas(mesh, config, alphas);
}

PerturbedMesh perturb_with_alphas(const MeshPtr& mesh, const PerturbationConfig& config,
                                  std::span<const Point> alphas) {
  return PerturbedMesh(mesh, displacements_from_alphas(*mesh, config, alphas), config.p);
}

}  // namespace rmfem

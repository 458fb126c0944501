#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rmfem/mesh.hpp"
#include "rmfem/random.hpp"

using namespace rmfem;

namespace {

MeshPtr share(SimplicialMesh m) { return std::make_shared<const SimplicialMesh>(std::move(m)); }

Index first_interior(const SimplicialMesh& m) {
  for (Index i = 0; i < m.n_vertices(); ++i)
    if (!m.on_boundary(i)) return i;
  return -1;
}

double signed_area(const SimplicialMesh& m, Index k) {
  auto e = m.element(k);
  return 0.5 * cross(m.vertex(e[1]) - m.vertex(e[0]), m.vertex(e[2]) - m.vertex(e[0]));
}

}  // namespace

TEST(Builders, Uniform1DTwoElements) {
  const auto m = build_uniform_1d(2);
  ASSERT_EQ(m.n_vertices(), 3);
  EXPECT_DOUBLE_EQ(m.vertex(1).x, 0.5);
  EXPECT_EQ(m.element(0)[0], 0);
  EXPECT_EQ(m.element(1)[1], 2);
  EXPECT_DOUBLE_EQ(m.h(), 0.5);
  EXPECT_TRUE(m.on_boundary(0));
  EXPECT_FALSE(m.on_boundary(1));
}

TEST(Builders, Uniform1DThirty) { EXPECT_NEAR(build_uniform_1d(30).h(), 1.0 / 30.0, 1e-15); }

TEST(Builders, Uniform1DOnLongerInterval) {
  const auto m = build_uniform_1d(4, 0.0, 2.0);
  for (double d : m.element_diams()) EXPECT_DOUBLE_EQ(d, 0.5);
}

TEST(Builders, RejectsBadSizes) {
  EXPECT_THROW(build_uniform_1d(0), InvalidArgument);
  EXPECT_THROW(build_structured_2d(0), InvalidArgument);
  EXPECT_THROW(build_from_points_1d({0.0, 0.5, 0.5, 1.0}), InvalidArgument);
}

TEST(Builders, Structured2DCounts) {
  const auto m = build_structured_2d(2);
  EXPECT_EQ(m.n_vertices(), 9);
  EXPECT_EQ(m.n_elements(), 8);
  EXPECT_NEAR(m.total_measure(), 1.0, 1e-14);
}

TEST(Builders, Structured2DShortSide) {
  const auto m = build_structured_2d(10);
  double shortest = 1e9;
  for (Index k = 0; k < m.n_elements(); ++k) {
    auto e = m.element(k);
    for (int i = 0; i < 3; ++i) shortest = std::min(shortest, norm(m.vertex(e[i]) - m.vertex(e[(i + 1) % 3])));
  }
  EXPECT_NEAR(shortest, 0.1, 1e-14);
}

TEST(Builders, Structured2DInteriorPatchesHaveSixTriangles) {
  const auto m = build_structured_2d(3);
  for (Index i = 0; i < m.n_vertices(); ++i)
    if (!m.on_boundary(i)) EXPECT_EQ(m.patch(i).size(), 6u);
}

TEST(Builders, LShape) {
  const auto m3 = build_lshape_2d(3);
  EXPECT_LE(m3.h(), std::sqrt(2.0) / 3.0 + 1e-14);
  const auto m2 = build_lshape_2d(2);
  EXPECT_NEAR(m2.total_measure(), 3.0, 1e-13);
  for (const Point& v : m2.vertices()) EXPECT_TRUE(v.x >= 0.0 || v.y >= 0.0);
  for (Index k = 0; k < m2.n_elements(); ++k) {
    const Point c = m2.centroid(k);
    EXPECT_FALSE(c.x < 0.0 && c.y < 0.0);
  }
  EXPECT_NO_THROW(check_conformity(m2));
}

TEST(Builders, DiametersAndPatches) {
  const auto m = build_lshape_2d(2);
  double hmax = 0.0;
  for (Index k = 0; k < m.n_elements(); ++k) {
    auto e = m.element(k);
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d = std::max(d, norm(m.vertex(e[i]) - m.vertex(e[(i + 1) % 3])));
    EXPECT_DOUBLE_EQ(m.element_diam(k), d);
    EXPECT_GT(signed_area(m, k), 0.0);
    hmax = std::max(hmax, d);
  }
  EXPECT_DOUBLE_EQ(m.h(), hmax);
  for (Index i = 0; i < m.n_vertices(); ++i) EXPECT_FALSE(m.patch(i).empty());
}

TEST(Builders, FromDataRejectsNonConformingTriangles) {
  // Edge 0-1 shared by three triangles.
  std::vector<Point> v = {{0, 0}, {1, 0}, {0.5, 1}, {0.5, 0.5}, {0.5, -1}};
  std::vector<Index> el = {0, 1, 2, 0, 1, 3, 1, 0, 4};
  EXPECT_THROW(SimplicialMesh::from_data(2, v, el), InvalidArgument);
  EXPECT_THROW(SimplicialMesh::from_data(2, {{0, 0}, {1, 0}, {0, 1}}, {0, 1, 7}), InvalidArgument);
  // Clockwise triangle.
  EXPECT_THROW(SimplicialMesh::from_data(2, {{0, 0}, {0, 1}, {1, 0}}, {0, 1, 2}), InvalidArgument);
}

TEST(QuasiUniformity, Examples) {
  EXPECT_DOUBLE_EQ(quasi_uniformity(build_uniform_1d(7)), 1.0);
  EXPECT_NEAR(quasi_uniformity(build_from_points_1d({0.0, 0.2, 0.6, 1.0})), 2.0, 1e-14);
  EXPECT_NEAR(quasi_uniformity(build_structured_2d(4)), 1.0, 1e-14);
}

TEST(ElementSizes, OneDIsLengthTwoDIsEnclosingRadius) {
  const auto s1 = element_sizes(build_from_points_1d({0.0, 0.2, 0.6, 1.0}));
  EXPECT_NEAR(s1[0], 0.2, 1e-15);
  EXPECT_NEAR(s1[1], 0.4, 1e-15);
  // Right isosceles triangle: the enclosing disk has the hypotenuse as diameter.
  const auto m = build_structured_2d(2);
  for (double s : element_sizes(m)) EXPECT_NEAR(s, std::sqrt(2.0) / 4.0, 1e-15);
  // Equilateral triangle of side 1: circumradius 1/sqrt(3).
  const auto eq = SimplicialMesh::from_data(2, {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}}, {0, 1, 2});
  EXPECT_NEAR(element_sizes(eq)[0], 1.0 / std::sqrt(3.0), 1e-14);
  // Obtuse triangle: the longest edge is the diameter of the smallest disk.
  const auto ob = SimplicialMesh::from_data(2, {{0, 0}, {2, 0}, {1, 0.2}}, {0, 1, 2});
  EXPECT_NEAR(element_sizes(ob)[0], 1.0, 1e-14);
}

TEST(Perturb, DirectSubstitution) {
  const auto mesh = share(build_uniform_1d(2));
  PerturbationConfig pc;
  pc.p = 1.0;
  const std::vector<Point> alphas = {{0, 0}, {0.25, 0}, {0, 0}};
  const PerturbedMesh pm = perturb_with_alphas(mesh, pc, alphas);
  EXPECT_DOUBLE_EQ(pm.mesh()->vertex(1).x, 0.625);
  EXPECT_DOUBLE_EQ(pm.mesh()->vertex(0).x, 0.0);
  EXPECT_TRUE(pm.mesh()->shares_topology(*mesh));
}

TEST(Perturb, ZeroAlphasGiveTheReference) {
  const auto mesh = share(build_structured_2d(4));
  PerturbationConfig pc;
  pc.p = 2.0;
  const std::vector<Point> alphas(mesh->n_vertices());
  const PerturbedMesh pm = perturb_with_alphas(mesh, pc, alphas);
  EXPECT_EQ(pm.mesh()->vertices(), mesh->vertices());
}

TEST(Perturb, DisplacementBound) {
  const auto mesh = share(build_uniform_1d(10));
  PerturbationConfig pc;
  pc.p = 2.0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const PerturbedMesh pm = perturb(mesh, pc, r);
    for (Index i = 0; i < mesh->n_vertices(); ++i)
      EXPECT_LE(std::abs(pm.mesh()->vertex(i).x - mesh->vertex(i).x), 0.005 + 1e-17);
  }
}

TEST(Perturb, RejectsBadConfig) {
  PerturbationConfig pc;
  pc.p = 0.5;
  EXPECT_THROW(pc.validate(), InvalidArgument);
  pc.p = 1.0;
  pc.radius = 0.6;
  EXPECT_THROW(pc.validate(), InvalidArgument);
  pc.radius = 0.0;
  EXPECT_THROW(pc.validate(), InvalidArgument);
}

TEST(Perturb, OneDStaysOrdered) {
  RandomStream rng(11, {});
  std::vector<double> pts = {0.0, 1.0};
  for (int i = 0; i < 15; ++i) pts.push_back(rng.uniform());
  const auto mesh = share(build_from_points_1d(pts));
  PerturbationConfig pc;
  pc.seed = 3;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    const auto& v = perturb(mesh, pc, r).mesh()->vertices();
    for (std::size_t i = 1; i < v.size(); ++i) ASSERT_LT(v[i - 1].x, v[i].x);
  }
}

TEST(Perturb, TwoDKeepsOrientation) {
  const auto mesh = share(build_lshape_2d(4));
  for (bool boundary : {false, true}) {
    PerturbationConfig pc;
    pc.include_boundary = boundary;
    pc.seed = 5;
    for (std::uint64_t r = 0; r < 1000; ++r) {
      const PerturbedMesh pm = perturb(mesh, pc, r);
      for (Index k = 0; k < mesh->n_elements(); ++k) ASSERT_GT(signed_area(*pm.mesh(), k), 0.0);
      if (!boundary)
        for (Index i = 0; i < mesh->n_vertices(); ++i)
          if (mesh->on_boundary(i)) ASSERT_EQ(pm.mesh()->vertex(i), mesh->vertex(i));
    }
  }
}

TEST(Perturb, BoundaryReflectionKeepsVerticesInTheDomain) {
  const auto mesh = share(build_structured_2d(5));
  PerturbationConfig pc;
  pc.include_boundary = true;
  pc.p = 1.0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const PerturbedMesh pm = perturb(mesh, pc, r);
    EXPECT_LE(pm.mesh()->total_measure(), 1.0 + 1e-14);
    bool moved = false;
    for (Index i = 0; i < mesh->n_vertices(); ++i) {
      const Point a = mesh->vertex(i), b = pm.mesh()->vertex(i);
      EXPECT_TRUE(b.x >= 0.0 && b.x <= 1.0 && b.y >= 0.0 && b.y <= 1.0);
      const bool corner = (a.x == 0.0 || a.x == 1.0) && (a.y == 0.0 || a.y == 1.0);
      if (corner) EXPECT_EQ(a, b);
      if (mesh->on_boundary(i) && !corner && !(a == b)) moved = true;
    }
    EXPECT_TRUE(moved);
  }
}

TEST(Perturb, PureFunctionOfSeed) {
  const auto mesh = share(build_structured_2d(6));
  PerturbationConfig pc;
  pc.seed = 42;
  const auto a = perturb(mesh, pc, 7).mesh()->vertices();
  const auto b = perturb(mesh, pc, 7).mesh()->vertices();
  EXPECT_EQ(a, b);
  pc.seed = 43;
  EXPECT_NE(a, perturb(mesh, pc, 7).mesh()->vertices());
}

TEST(Perturb, PositionKeyedDrawsFollowVertices) {
  const auto coarse = build_uniform_1d(4);
  const Index marked[] = {0};
  const auto fine = refine(coarse, marked);
  PerturbationConfig pc;
  pc.stream_key = StreamKey::VertexPosition;
  pc.seed = 9;
  const auto ac = draw_alphas(coarse, pc, 3);
  const auto af = draw_alphas(fine, pc, 3);
  // Vertex x = 0.5 is index 2 on the coarse mesh and 3 after inserting 0.125.
  EXPECT_EQ(ac[2], af[3]);
  pc.stream_key = StreamKey::VertexIndex;
  EXPECT_NE(draw_alphas(coarse, pc, 3)[2], draw_alphas(fine, pc, 3)[3]);
}

TEST(Perturb, AlphaMeanIsZero) {
  for (int dim : {1, 2}) {
    const auto mesh = dim == 1 ? build_uniform_1d(2) : build_structured_2d(2);
    PerturbationConfig pc;
    const Index v = first_interior(mesh);
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0;
    for (int r = 0; r < n; ++r) {
      const Point a = draw_alphas(mesh, pc, r)[v];
      ASSERT_LE(norm(a), 0.5);
      sx += a.x;
      sy += a.y;
      sxx += a.x * a.x;
      syy += a.y * a.y;
    }
    const double mx = sx / n, my = sy / n;
    EXPECT_LE(std::abs(mx), 3.0 * std::sqrt(sxx / n - mx * mx) / std::sqrt(n));
    if (dim == 2) EXPECT_LE(std::abs(my), 3.0 * std::sqrt(syy / n - my * my) / std::sqrt(n));
  }
}

TEST(LawMoments, ClosedFormsAgainstMonteCarlo) {
  const auto m1 = law_moments(RadialLaw::UniformBall, 1, 0.5);
  EXPECT_DOUBLE_EQ(m1.mean_abs, 0.25);
  EXPECT_DOUBLE_EQ(m1.mean_sq, 1.0 / 12.0);
  const auto m2 = law_moments(RadialLaw::UniformBall, 2, 0.5);
  EXPECT_DOUBLE_EQ(m2.mean_abs, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(m2.mean_sq, 1.0 / 8.0);

  for (RadialLaw law : {RadialLaw::UniformBall, RadialLaw::Shell, RadialLaw::Concentrated}) {
    for (int dim : {1, 2}) {
      const auto mesh = dim == 1 ? build_uniform_1d(2) : build_structured_2d(2);
      const Index v = first_interior(mesh);
      PerturbationConfig pc;
      pc.law = law;
      const auto ex = law_moments(law, dim, 0.5);
      const int n = 40000;
      double s1 = 0, s2 = 0, q1 = 0;
      for (int r = 0; r < n; ++r) {
        const double a = norm(draw_alphas(mesh, pc, r)[v]);
        s1 += a;
        s2 += a * a;
        q1 += a * a;
      }
      const double mean = s1 / n, sd = std::sqrt(q1 / n - mean * mean);
      EXPECT_NEAR(mean, ex.mean_abs, 4.0 * sd / std::sqrt(n) + 1e-15) << static_cast<int>(law) << " " << dim;
      EXPECT_NEAR(s2 / n, ex.mean_sq, 4.0 * 0.25 / std::sqrt(n)) << static_cast<int>(law) << " " << dim;
    }
  }
}

TEST(Refine, OneDBisection) {
  const Index marked[] = {0};
  const auto r = refine(build_uniform_1d(2), marked);
  ASSERT_EQ(r.n_vertices(), 4);
  EXPECT_DOUBLE_EQ(r.vertex(1).x, 0.25);
  EXPECT_DOUBLE_EQ(r.vertex(2).x, 0.5);
}

TEST(Refine, EmptyMarkingIsIdentity) {
  const auto m = build_structured_2d(3);
  const auto r = refine(m, std::span<const Index>{});
  EXPECT_EQ(r.vertices(), m.vertices());
  EXPECT_EQ(r.elements(), m.elements());
}

TEST(Refine, SingleTriangleStaysConforming) {
  const auto m = build_structured_2d(2);
  const Index marked[] = {3};
  const auto r = refine(m, marked);
  EXPECT_NO_THROW(check_conformity(r));
  EXPECT_GT(r.n_elements(), m.n_elements());
  EXPECT_NEAR(r.total_measure(), 1.0, 1e-14);
  // Edge-count invariant: E = V + F - 1 for a disk (Euler), boundary edges counted once.
  std::set<std::pair<Index, Index>> edges;
  for (Index k = 0; k < r.n_elements(); ++k) {
    auto e = r.element(k);
    for (int i = 0; i < 3; ++i) edges.insert(std::minmax(e[i], e[(i + 1) % 3]));
  }
  EXPECT_EQ(static_cast<Index>(edges.size()), r.n_vertices() + r.n_elements() - 1);
}

TEST(Refine, RandomMarkingsStayConforming) {
  RandomStream rng(17, {});
  for (int t = 0; t < 200; ++t) {
    SimplicialMesh m = (t % 2) ? build_lshape_2d(2 + t % 3) : build_structured_2d(2 + t % 4);
    for (int pass = 0; pass < 2; ++pass) {
      std::vector<Index> marked;
      for (Index k = 0; k < m.n_elements(); ++k)
        if (rng.uniform() < 0.2) marked.push_back(k);
      SimplicialMesh r = refine(m, marked);
      ASSERT_NO_THROW(check_conformity(r));
      ASSERT_NEAR(r.total_measure(), m.total_measure(), 1e-12);
      // Refined elements are replaced by strictly smaller ones: the marked centroids now lie
      // in elements of smaller diameter.
      for (Index k : marked) {
        const Location loc = locate(r, m.centroid(k));
        ASSERT_LT(r.element_diam(loc.element), m.element_diam(k) + 1e-15);
      }
      m = std::move(r);
    }
  }
}

TEST(Coarsen, Examples) {
  const auto m = build_from_points_1d({0.0, 0.25, 0.5, 1.0});
  const Index one[] = {1};
  const auto c = coarsen_1d(m, one);
  ASSERT_EQ(c.n_vertices(), 3);
  EXPECT_DOUBLE_EQ(c.vertex(1).x, 0.5);

  const auto same = coarsen_1d(m, std::span<const Index>{});
  EXPECT_EQ(same.vertices(), m.vertices());

  const auto m5 = build_from_points_1d({0.0, 0.25, 0.5, 0.75, 1.0});
  const Index two[] = {1, 2};
  const auto c5 = coarsen_1d(m5, two);
  ASSERT_EQ(c5.n_vertices(), 4);
  EXPECT_DOUBLE_EQ(c5.vertex(1).x, 0.5);
  EXPECT_DOUBLE_EQ(c5.vertex(2).x, 0.75);
}

TEST(Coarsen, RejectsBoundaryVertices) {
  const auto m = build_uniform_1d(4);
  const Index marked[] = {0, 4};
  EXPECT_THROW(coarsen_1d(m, marked), InvalidArgument);
}

TEST(Locate, OneD) {
  const auto m = build_uniform_1d(2);
  const Location loc = locate(m, {0.25, 0});
  EXPECT_EQ(loc.element, 0);
  EXPECT_DOUBLE_EQ(loc.barycentric[0], 0.5);
  EXPECT_DOUBLE_EQ(loc.barycentric[1], 0.5);
  const Location v = locate(m, {0.5, 0});
  const auto el = m.element(v.element);
  for (int i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(v.barycentric[i], el[i] == 1 ? 1.0 : 0.0);
  EXPECT_THROW(locate(m, {1.5, 0}), OutOfDomain);
}

TEST(Locate, TwoDMatchesBruteForce) {
  const auto m = build_structured_2d(2);
  // (0.1, 0.1) lies on a cell diagonal, so two triangles contain it.
  for (Point p : {Point{0.1, 0.1}, Point{0.1, 0.13}, Point{0.77, 0.31}}) {
    const Location loc = locate(m, p);
    EXPECT_NEAR(loc.barycentric[0] + loc.barycentric[1] + loc.barycentric[2], 1.0, 1e-14);
    for (double b : loc.barycentric) EXPECT_GE(b, -1e-12);
    std::vector<Index> hits;
    for (Index k = 0; k < m.n_elements(); ++k) {
      auto e = m.element(k);
      const Point a = m.vertex(e[0]), b = m.vertex(e[1]), c = m.vertex(e[2]);
      if (cross(b - a, p - a) >= 0 && cross(c - b, p - b) >= 0 && cross(a - c, p - c) >= 0) hits.push_back(k);
    }
    EXPECT_NE(std::find(hits.begin(), hits.end(), loc.element), hits.end());
    EXPECT_EQ(hits.size(), (p == Point{0.1, 0.1}) ? 2u : 1u);
  }
  EXPECT_THROW(locate(build_lshape_2d(2), {-0.5, -0.5}), OutOfDomain);
}

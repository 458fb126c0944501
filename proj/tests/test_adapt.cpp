#include <gtest/gtest.h>

#include <cmath>

#include "rmfem/adapt.hpp"
#include "rmfem/catalog.hpp"

using namespace rmfem;

namespace {

MeshPtr share(SimplicialMesh m) { return std::make_shared<const SimplicialMesh>(std::move(m)); }

AdaptConfig small_1d() {
  AdaptConfig c;
  c.gamma = 2e-2;
  c.n_realizations = 10;
  c.max_iterations = 10;
  return c;
}

}  // namespace

TEST(GammaLoc, Examples) {
  const auto mesh = share(build_uniform_1d(100));
  std::vector<double> v;
  for (const Point& p : mesh->vertices()) v.push_back(2.0 * p.x);
  const PwLinearField u(mesh, v);
  EXPECT_NEAR(gamma_loc(0.01, u, 100), 0.002, 1e-15);
  EXPECT_NEAR(gamma_loc(0.01, u, 100, 2.0), 0.001, 1e-15);
  EXPECT_THROW(gamma_loc(0.01, PwLinearField(mesh, std::vector<double>(101, 0.0)), 100), InvalidArgument);
}

TEST(GammaLoc, LocalThresholdImpliesGlobal) {
  // All eta_K <= gamma_loc gives (sum eta_K^2)^(1/2) <= gamma |u_h|.
  const auto mesh = share(build_uniform_1d(40));
  std::vector<double> v;
  for (const Point& p : mesh->vertices()) v.push_back(std::sin(3 * p.x));
  const PwLinearField u(mesh, v);
  const double g = gamma_loc(0.05, u, 40);
  EXPECT_LE(std::sqrt(40.0) * g, 0.05 * h1_seminorm(u) * (1 + 1e-14));
}

TEST(AdaptConfig, Validation) {
  AdaptConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = AdaptConfig{};
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = AdaptConfig{};
  c.n_realizations = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(AdaptLoop, LinearSolutionStopsAtOnce) {
  const EllipticProblem prob{[](Point) { return 1.0; }, [](Point) { return 0.0; }, [](Point x) { return 1.0 + x.x; }};
  const auto r = adapt_loop(prob, share(build_uniform_1d(7)), small_1d());
  ASSERT_EQ(r.iterations.size(), 1u);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.iterations[0].refined.empty());
  EXPECT_EQ(r.final_mesh->n_elements(), 7);
  EXPECT_NEAR(r.iterations[0].estimator, 0.0, 1e-12);
}

TEST(AdaptLoop, MarksExactlyAboveThreshold) {
  const auto prob = catalog::oscillatory_1d();
  const auto r = adapt_loop(prob.problem, share(build_uniform_1d(30)), small_1d(), prob.exact);
  ASSERT_FALSE(r.iterations.empty());
  for (const auto& it : r.iterations) {
    std::vector<Index> expect;
    for (Index k = 0; k < it.mesh->n_elements(); ++k)
      if (it.local[k] > it.gamma_loc) expect.push_back(k);
    EXPECT_EQ(it.refined, expect) << it.iteration;
    EXPECT_NEAR(it.gamma_loc, gamma_loc(2e-2, solve(prob.problem, it.mesh), it.n_elements), 1e-12);
    EXPECT_GE(it.estimator, 0.0);
    EXPECT_GT(it.true_error, 0.0);
    for (Index v : it.coarsened) EXPECT_FALSE(it.mesh->on_boundary(v));
  }
  EXPECT_EQ(r.converged, r.iterations.back().refined.empty());
}

TEST(AdaptLoop, NonConvergenceIsReported) {
  const auto prob = catalog::oscillatory_1d();
  auto c = small_1d();
  c.gamma = 1e-4;
  c.max_iterations = 2;
  const auto r = adapt_loop(prob.problem, share(build_uniform_1d(10)), c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations.size(), 2u);
  EXPECT_TRUE(std::isnan(r.iterations[0].true_error));
}

TEST(AdaptLoop, IndependentOfThreadCount) {
  const auto prob = catalog::oscillatory_1d();
  const auto c = small_1d();
  const auto a = adapt_loop(prob.problem, share(build_uniform_1d(30)), c, prob.exact);
  const ThreadPool pool(3);
  const auto b = adapt_loop(prob.problem, share(build_uniform_1d(30)), c, prob.exact, &pool);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].local, b.iterations[i].local);
    EXPECT_EQ(a.iterations[i].refined, b.iterations[i].refined);
  }
  EXPECT_EQ(a.final_values, b.final_values);
}

TEST(AdaptLoop, BabuskaAndRM1MeshesComparable) {
  const auto prob = catalog::oscillatory_1d();
  // The equivalence constants relate the raw estimators, so no normalization here.
  AdaptConfig c;
  c.n_realizations = 20;
  c.normalization = Normalization::None;
  const auto rm1 = adapt_loop(prob.problem, share(build_uniform_1d(30)), c, prob.exact);
  c.estimator = EstimatorKind::Babuska;
  const auto br = adapt_loop(prob.problem, share(build_uniform_1d(30)), c, prob.exact);
  const double a = rm1.final_mesh->n_elements(), b = br.final_mesh->n_elements();
  EXPECT_LE(std::max(a, b) / std::min(a, b), 2.0) << a << " vs " << b;
}

TEST(AdaptLoop, Refinement2DShrinksMarkedElements) {
  const auto prob = catalog::arctan_front(20.0);
  AdaptConfig c;
  c.gamma = 0.1;
  c.estimator = EstimatorKind::RM2;
  c.n_realizations = 10;
  c.max_iterations = 4;
  c.coarsen_factor = 0.0;
  c.include_boundary = true;
  const auto r = adapt_loop(prob.problem, share(build_structured_2d(5)), c, prob.exact);
  for (std::size_t i = 0; i + 1 < r.iterations.size(); ++i) {
    const auto& it = r.iterations[i];
    const auto& next = *r.iterations[i + 1].mesh;
    if (it.refined.empty()) continue;
    EXPECT_GT(next.n_elements(), it.n_elements);
    for (Index k : it.refined) {
      // The child containing the centroid of a marked element is strictly smaller.
      const Point cen = it.mesh->centroid(k);
      EXPECT_LT(next.element_diam(locate(next, cen).element), it.mesh->element_diam(k));
    }
  }
}

#include "rmfem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "rmfem/types.hpp"

namespace rmfem::quadrature {
namespace {

Rule1D compute_gauss_legendre(int n) {
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 0 ? 1.0 : (n == 1 ? x : p1);
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // map [-1, 1] -> [0, 1]
    rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const Rule1D& gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: need at least one point");
  static std::mutex mutex;
  static std::map<int, Rule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

const RuleTriangle& triangle_degree4() {
  static const RuleTriangle rule = [] {
    RuleTriangle r;
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      r.barycentric.push_back({a, a, b});
      r.barycentric.push_back({a, b, a});
      r.barycentric.push_back({b, a, a});
      r.weights.insert(r.weights.end(), 3, w);
    }
    return r;
  }();
  return rule;
}

RuleTriangle triangle_collapsed(int n) {
  const Rule1D& g = gauss_legendre(n);
  RuleTriangle r;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // (s, t) in the unit square -> (s, t (1 - s)) in the triangle
      const double s = g.nodes[i];
      const double t = g.nodes[j];
      const double l1 = s;
      const double l2 = t * (1.0 - s);
      r.barycentric.push_back({1.0 - l1 - l2, l1, l2});
      r.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - s));
    }
  }
  return r;
}

}  // namespace rmfem::quadrature

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rmfem/fem.hpp"
#include "rmfem/mesh.hpp"

namespace rmfem::oracle {

// Raw RM1 integrand of one realization by composite midpoint sampling, independent of the
// supermesh code: u_h' looked up by brute-force search, I~u_h' from point values of u_h at the
// displaced vertices. Sample intervals are split at the reference vertices inside each
// perturbed element so that both slopes are constant on every sample interval.
inline std::vector<double> rm1_dense(const PwLinearField& u_h, const std::vector<Point>& delta, double p,
                                      int samples_per_element) {
  const SimplicialMesh& m = *u_h.mesh();
  const Index n = m.n_elements();
  std::vector<double> xt(m.n_vertices()), vt(m.n_vertices());
  for (Index i = 0; i < m.n_vertices(); ++i) {
    xt[i] = m.vertex(i).x + delta[i].x;
    vt[i] = u_h.evaluate(Point{xt[i], 0.0});
  }
  auto slope_at = [&](double x) {
    for (Index k = 0; k < n; ++k)
      if (x >= m.vertex(k).x && x <= m.vertex(k + 1).x)
        return (u_h.value(k + 1) - u_h.value(k)) / (m.vertex(k + 1).x - m.vertex(k).x);
    return std::nan("");
  };
  std::vector<double> out(n);
  for (Index k = 0; k < n; ++k) {
    const double a = xt[k], b = xt[k + 1];
    const double st = (vt[k + 1] - vt[k]) / (b - a);
    std::vector<double> cuts = {a, b};
    for (Index i = 0; i < m.n_vertices(); ++i)
      if (m.vertex(i).x > a && m.vertex(i).x < b) cuts.push_back(m.vertex(i).x);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double lo = cuts[c], hi = cuts[c + 1];
      const int ns = std::max(1, static_cast<int>(samples_per_element * (hi - lo) / (b - a)));
      const double dx = (hi - lo) / ns;
      for (int j = 0; j < ns; ++j) {
        const double d = slope_at(lo + (j + 0.5) * dx) - st;
        s += d * d * dx;
      }
    }
    out[k] = std::pow(m.measure(k), -(p - 1.0)) * s;
  }
  return out;
}

// Same-draw recomputation of the raw RM2 indicators from the interpolant.
inline std::vector<double> rm2_recompute(const PwLinearField& u_h, const PerturbedMesh& pm, double p) {
  const PwLinearField it = interpolate(u_h, pm);
  const auto size = element_sizes(*u_h.mesh());
  std::vector<double> out;
  for (Index k = 0; k < u_h.mesh()->n_elements(); ++k) {
    const Point d = u_h.gradient(k) - it.gradient(k);
    out.push_back(std::pow(size[k], -(2.0 * p - 2.0)) * u_h.mesh()->measure(k) * dot(d, d));
  }
  return out;
}

}  // namespace rmfem::oracle

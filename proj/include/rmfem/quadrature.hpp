#pragma once

#include <array>
#include <vector>

namespace rmfem::quadrature {

/// Nodes and weights on the reference interval [0, 1]; weights sum to 1.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes given as barycentric coordinates on the reference triangle; weights sum to 1.
struct RuleTriangle {
  std::vector<std::array<double, 3>> barycentric;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n - 1.
const Rule1D& gauss_legendre(int n);

/// Symmetric 6-point rule exact for degree 4.
const RuleTriangle& triangle_degree4();

/// Collapsed (Duffy) tensor rule with n x n points, exact for degree 2n - 2 at least.
RuleTriangle triangle_collapsed(int n);

}  // namespace rmfem::quadrature

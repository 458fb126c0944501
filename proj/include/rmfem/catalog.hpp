#pragma once

#include <optional>
#include <string>

#include "rmfem/fem.hpp"

namespace rmfem::catalog {

struct Problem {
  std::string name;
  EllipticProblem problem;
  std::optional<ExactSolution> exact;
};

/// kappa = 1 + x^3, u = x^3 sin(a pi x) exp(-b (x - 1/2)^2) on (0, 1).
Problem oscillatory_1d(double a = 15.0, double b = 50.0);

/// kappa = 1, u = sin(2 pi x) on (0, 1).
Problem smooth_1d();

/// -Laplace u = f on the unit square, u = -x(1-x)y(1-y) atan(beta((x+y)/sqrt 2 - 4/5)).
Problem arctan_front(double beta = 20.0);

/// Laplace u = 0 on the L-shape, u = r^{2/3} sin(2/3 (theta + pi/2)), theta in [-pi/2, pi].
Problem lshape_corner();

}  // namespace rmfem::catalog

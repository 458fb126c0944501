#include "rmfem/catalog.hpp"

#include <cmath>
#include <numbers>

namespace rmfem::catalog {

using std::numbers::pi;

Problem oscillatory_1d(double a, double b) {
  struct Parts {
    double u, du, d2u;
  };
  auto parts = [a, b](double x) {
    const double q = x * x * x, dq = 3.0 * x * x, d2q = 6.0 * x;
    const double w = a * pi;
    const double g = std::sin(w * x), dg = w * std::cos(w * x), d2g = -w * w * g;
    const double c = x - 0.5;
    const double e = std::exp(-b * c * c), de = -2.0 * b * c * e, d2e = (4.0 * b * b * c * c - 2.0 * b) * e;
    return Parts{q * g * e, dq * g * e + q * dg * e + q * g * de,
                 d2q * g * e + q * d2g * e + q * g * d2e + 2.0 * (dq * dg * e + dq * g * de + q * dg * de)};
  };
  Problem p;
  p.name = "oscillatory_1d";
  p.problem.kappa = [](Point x) { return 1.0 + x.x * x.x * x.x; };
  p.problem.f = [parts](Point x) {
    const Parts s = parts(x.x);
    return -(3.0 * x.x * x.x * s.du + (1.0 + x.x * x.x * x.x) * s.d2u);
  };
  p.exact = ExactSolution{[parts](Point x) { return parts(x.x).u; },
                          [parts](Point x) { return Point{parts(x.x).du, 0.0}; }};
  return p;
}

Problem smooth_1d() {
  Problem p;
  p.name = "smooth_1d";
  p.problem.kappa = [](Point) { return 1.0; };
  p.problem.f = [](Point x) { return 4.0 * pi * pi * std::sin(2.0 * pi * x.x); };
  p.exact = ExactSolution{[](Point x) { return std::sin(2.0 * pi * x.x); },
                          [](Point x) { return Point{2.0 * pi * std::cos(2.0 * pi * x.x), 0.0}; }};
  return p;
}

Problem arctan_front(double beta) {
  struct Parts {
    double P, A, lapP, lapA;
    Point gP, gA;
  };
  auto parts = [beta](Point x) {
    const double px = x.x * (1.0 - x.x), py = x.y * (1.0 - x.y);
    const double s = beta * ((x.x + x.y) / std::numbers::sqrt2 - 0.8);
    const double ds = beta / std::numbers::sqrt2;
    const double den = 1.0 + s * s;
    Parts r;
    r.P = px * py;
    r.A = std::atan(s);
    r.gP = {(1.0 - 2.0 * x.x) * py, px * (1.0 - 2.0 * x.y)};
    r.gA = {ds / den, ds / den};
    r.lapP = -2.0 * py - 2.0 * px;
    r.lapA = beta * beta * (-2.0 * s) / (den * den);
    return r;
  };
  Problem p;
  p.name = "arctan_front";
  p.problem.kappa = [](Point) { return 1.0; };
  // u = -P A, so f = -Laplace u = Laplace(P A)
  p.problem.f = [parts](Point x) {
    const Parts s = parts(x);
    return s.lapP * s.A + 2.0 * dot(s.gP, s.gA) + s.P * s.lapA;
  };
  p.exact = ExactSolution{[parts](Point x) {
                            const Parts s = parts(x);
                            return -s.P * s.A;
                          },
                          [parts](Point x) {
                            const Parts s = parts(x);
                            return -1.0 * (s.A * s.gP + s.P * s.gA);
                          }};
  return p;
}

Problem lshape_corner() {
  auto u = [](Point x) {
    const double r = std::hypot(x.x, x.y);
    if (r == 0.0) return 0.0;
    double theta = std::atan2(x.y, x.x);
    if (theta < -pi / 2.0) theta += 2.0 * pi;
    return std::pow(r, 2.0 / 3.0) * std::sin(2.0 / 3.0 * (theta + pi / 2.0));
  };
  auto grad = [](Point x) {
    const double r = std::hypot(x.x, x.y);
    if (r == 0.0) return Point{};
    double theta = std::atan2(x.y, x.x);
    if (theta < -pi / 2.0) theta += 2.0 * pi;
    const double phi = 2.0 / 3.0 * (theta + pi / 2.0);
    const double c = 2.0 / 3.0 * std::pow(r, -1.0 / 3.0);
    const double ur = c * std::sin(phi), ut = c * std::cos(phi);  // u_r and u_theta / r
    const double ct = std::cos(theta), st = std::sin(theta);
    return Point{ct * ur - st * ut, st * ur + ct * ut};
  };
  Problem p;
  p.name = "lshape_corner";
  p.problem.kappa = [](Point) { return 1.0; };
  p.problem.f = [](Point) { return 0.0; };
  p.problem.dirichlet = u;
  p.exact = ExactSolution{u, grad};
  return p;
}

}  // namespace rmfem::catalog

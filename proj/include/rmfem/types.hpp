#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmfem {

using Index = std::int32_t;

/// Coordinates in the plane; 1D geometry uses x only and keeps y = 0.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
double norm(Point a);

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A mesh or chain invariant was broken; indicates a bug or an inadmissible configuration.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace rmfem

#include "rmfem/types.hpp"

#include <cmath>

namespace rmfem {

double norm(Point a) { return std::hypot(a.x, a.y); }

}  // namespace rmfem

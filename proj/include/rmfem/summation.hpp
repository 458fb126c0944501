#pragma once

#include <cstddef>
#include <span>

namespace rmfem {

/// Pairwise (cascade) summation: deterministic for a given input order, O(log n) error growth.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

}  // namespace rmfem

#pragma once

#include <cstddef>
#include <functional>

namespace rmfem {

/// Fixed-size worker group. `parallel_for` splits [0, n) into contiguous
/// chunks; callers write results into index-addressed slots so the outcome
/// does not depend on scheduling.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads = 0);

  unsigned size() const { return threads_; }

  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) const;

 private:
  unsigned threads_;
};

/// Serial fallback when no pool is supplied.
void parallel_for(const ThreadPool* pool, std::size_t n,
                  const std::function<void(std::size_t)>& body);

}  // namespace rmfem

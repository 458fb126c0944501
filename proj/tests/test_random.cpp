#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "rmfem/parallel.hpp"
#include "rmfem/random.hpp"

using namespace rmfem;

TEST(RandomStream, PureFunctionOfKey) {
  RandomStream a(5, {1, 2}), b(5, {1, 2}), c(5, {2, 1});
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
  EXPECT_NE(substream_key(0, {}), substream_key(1, {}));
  EXPECT_NE(substream_key(0, {0}), substream_key(0, {}));
}

TEST(RandomStream, UniformMoments) {
  RandomStream r(3, {});
  const int n = 200000;
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    m += u / n;
    v += u * u / n;
  }
  EXPECT_NEAR(m, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(v - m * m, 1.0 / 12, 2e-3);
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(4, {});
  const int n = 200000;
  double m = 0.0, v = 0.0, k = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    ASSERT_TRUE(std::isfinite(z));
    m += z / n;
    v += z * z / n;
    k += z * z * z * z / n;
  }
  EXPECT_NEAR(m, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(v, 1.0, 0.02);
  EXPECT_NEAR(k, 3.0, 0.1);
}

TEST(ThreadPool, CoversEveryIndexOnce) {
  for (unsigned t : {1u, 2u, 5u}) {
    const ThreadPool pool(t);
    EXPECT_EQ(pool.size(), t);
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
      std::vector<std::atomic<int>> hits(n);
      pool.parallel_for(n, [&](std::size_t i) { hits[i]++; });
      for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
  }
  EXPECT_GE(ThreadPool(0).size(), 1u);
}

TEST(ThreadPool, PropagatesExceptions) {
  const ThreadPool pool(3);
  EXPECT_THROW(pool.parallel_for(100, [](std::size_t i) {
    if (i == 57) throw std::runtime_error("boom");
  }), std::runtime_error);
  std::vector<int> out(10, 0);
  parallel_for(nullptr, 10, [&](std::size_t i) { out[i] = static_cast<int>(i); });
  EXPECT_EQ(out[9], 9);
}

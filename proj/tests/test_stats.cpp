#include "xmkt/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "xmkt/error.hpp"
#include "xmkt/parallel.hpp"
#include "xmkt/rng.hpp"

namespace xmkt {
namespace {

TEST(Percentile, OneToNIsAffineInP) {
  // for v = 1..n the linear convention gives 1 + (n-1) p / 100
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  std::shuffle(v.begin(), v.end(), std::mt19937_64(3));
  for (double p : {0.0, 0.5, 25.0, 50.0, 99.5, 100.0})
    EXPECT_NEAR(stats::percentile(v, p), 1.0 + 999.0 * p / 100.0, 1e-12) << p;
}

TEST(Percentile, MatchesSortOracle) {
  std::mt19937_64 eng(11);
  std::normal_distribution<double> N;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> v(2 + rep * 7);
    for (auto& x : v) x = N(eng);
    auto s = v;
    std::sort(s.begin(), s.end());
    for (double p : {0.5, 10.0, 33.3, 50.0, 90.0, 99.5}) {
      const double pos = p / 100.0 * static_cast<double>(s.size() - 1);
      const auto lo = static_cast<std::size_t>(pos);
      const auto hi = std::min(lo + 1, s.size() - 1);
      const double expect = s[lo] * (1.0 - (pos - static_cast<double>(lo))) + s[hi] * (pos - static_cast<double>(lo));
      EXPECT_NEAR(stats::percentile(v, p), expect, 1e-12);
    }
  }
}

TEST(Percentile, EmptyThrows) {
  std::vector<double> v;
  EXPECT_THROW(stats::percentile(v, 50), Error);
}

TEST(Median, OddAndEven) {
  std::vector<double> odd{5, 1, 3};
  std::vector<double> even{4, 1, 3, 2};
  EXPECT_DOUBLE_EQ(stats::median(odd), 3.0);
  EXPECT_DOUBLE_EQ(stats::median(even), 2.5);
}

TEST(SampleSd, DivisorNMinusOne) {
  std::vector<double> v{1, 2, 3, 4};
  EXPECT_NEAR(stats::sample_sd(v), std::sqrt(5.0 / 3.0), 1e-15);
}

TEST(Rng, DeriveIsStableAndKeyed) {
  EXPECT_EQ(rng::derive(1, "model", {2, 3}), rng::derive(1, "model", {2, 3}));
  EXPECT_NE(rng::derive(1, "model", {2, 3}), rng::derive(1, "model", {3, 2}));
  EXPECT_NE(rng::derive(1, "model"), rng::derive(1, "synth"));
  EXPECT_NE(rng::derive(1, "model"), rng::derive(2, "model"));
}

TEST(ParallelFor, SlotsIndependentOfWorkers) {
  for (int workers : {1, 3, 8}) {
    std::vector<std::size_t> out(100);
    parallel_for(out.size(), workers, [&](std::size_t i) { out[i] = i * i; });
    for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i], i * i);
  }
}

TEST(ParallelFor, RethrowsLowestIndex) {
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

}  // namespace
}  // namespace xmkt

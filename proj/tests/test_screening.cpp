#include "xmkt/screening.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "xmkt/error.hpp"
#include "xmkt/stats.hpp"

namespace xmkt {
namespace {

TEST(PairTstat, MatchesTextbookOls) {
  std::mt19937_64 eng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = testing::gaussian(eng, 250);
    auto y = testing::gaussian(eng, 250);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.5 * x[i];
    const auto s = pair_tstat(x, y);
    const double t = testing::textbook_slope_t(x, y);
    EXPECT_LE(std::abs(s.t_beta - t), 1e-10 * std::abs(t));
    EXPECT_EQ(s.status, PairStatus::Ok);
  }
}

TEST(PairTstat, PerfectFitSentinel) {
  std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8};
  const auto s = pair_tstat(x, y);
  EXPECT_EQ(s.status, PairStatus::PerfectFit);
  EXPECT_NEAR(s.beta, 2.0, 1e-14);
  EXPECT_EQ(s.t_beta, kPerfectFitT);
  std::vector<double> neg{-2, -4, -6, -8};
  EXPECT_EQ(pair_tstat(x, neg).t_beta, -kPerfectFitT);
  EXPECT_EQ(pair_tstat(x, x).status, PairStatus::PerfectFit);
}

TEST(PairTstat, ConstantPredictorAndShapes) {
  std::vector<double> c(5, 1.0), y{1, 2, 3, 4, 6};
  const auto s = pair_tstat(c, y);
  EXPECT_EQ(s.status, PairStatus::ConstantPredictor);
  EXPECT_EQ(s.t_beta, 0.0);
  EXPECT_THROW(pair_tstat(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(pair_tstat(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3, 4}), Error);
}

TEST(PairTstat, SignAndScaleProperties) {
  std::mt19937_64 eng(22);
  const auto x = testing::gaussian(eng, 250);
  auto y = testing::gaussian(eng, 250);
  const auto a = pair_tstat(x, y);
  auto neg = y, scaled = y;
  for (auto& v : neg) v = -v;
  for (auto& v : scaled) v *= 3.7;
  const auto b = pair_tstat(x, neg);
  EXPECT_EQ(b.beta, -a.beta);
  EXPECT_EQ(b.t_beta, -a.t_beta);
  const auto c = pair_tstat(x, scaled);
  EXPECT_NEAR(c.beta, 3.7 * a.beta, 1e-12 * std::abs(a.beta) + 1e-15);
  EXPECT_NEAR(c.t_beta, a.t_beta, 1e-10 * std::abs(a.t_beta));
}

struct Fixture {
  AlignedSource source;
  std::vector<std::string> targets;
  Matrix target;
};

Fixture random_fixture(std::size_t rows, std::size_t ns, std::size_t nt, std::uint64_t seed, double beta = 0.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> N;
  Fixture f;
  f.source.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ns));
  f.target.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(nt));
  for (std::size_t j = 0; j < ns; ++j) f.source.tickers.push_back("S" + std::to_string(100 + j));
  for (std::size_t i = 0; i < nt; ++i) f.targets.push_back("T" + std::to_string(100 + i));
  for (Eigen::Index t = 0; t < f.source.values.rows(); ++t)
    for (Eigen::Index j = 0; j < f.source.values.cols(); ++j) f.source.values(t, j) = N(eng);
  for (Eigen::Index t = 0; t < f.target.rows(); ++t)
    for (Eigen::Index i = 0; i < f.target.cols(); ++i)
      f.target(t, i) = N(eng) + beta * f.source.values(t, i % f.source.values.cols());
  return f;
}

TEST(BuildGraph, EdgeSetMatchesPairwiseOracle) {
  const auto f = random_fixture(300, 30, 12, 31, 0.15);
  ScreenConfig c;
  c.window = 250;
  c.winsorize = false;
  c.max_predictors.reset();
  const auto g = build_graph(f.source, f.targets, f.target, 280, Date(0), c);
  std::set<std::pair<int, int>> expect;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 30; ++j) {
      std::vector<double> x, y;
      for (int t = 30; t < 280; ++t) {
        x.push_back(f.source.values(t, j));
        y.push_back(f.target(t, i));
      }
      if (std::abs(testing::textbook_slope_t(x, y)) > 2.0) expect.insert({j, i});
    }
  std::set<std::pair<int, int>> got;
  for (const auto& e : g.edges()) {
    got.insert({e.source, e.target});
    EXPECT_GT(std::abs(e.t_beta), 2.0);
  }
  EXPECT_EQ(got, expect);
  const Matrix B = g.biadjacency();
  EXPECT_EQ(B.rows(), 12);
  EXPECT_EQ(B.cols(), 30);
  for (const auto& e : g.edges()) EXPECT_EQ(B(e.target, e.source), e.t_beta);
  EXPECT_EQ(static_cast<std::size_t>((B.array() != 0).count()), g.edge_count());
}

TEST(BuildGraph, WorkerCountDoesNotMatter) {
  const auto f = random_fixture(280, 40, 15, 32, 0.1);
  ScreenConfig c;
  const auto a = build_graph(f.source, f.targets, f.target, 270, Date(0), c, 1);
  const auto b = build_graph(f.source, f.targets, f.target, 270, Date(0), c, 8);
  ASSERT_EQ(a.edge_count(), b.edge_count());
  const auto ea = a.edges(), eb = b.edges();
  for (std::size_t k = 0; k < ea.size(); ++k) {
    EXPECT_EQ(ea[k].source, eb[k].source);
    EXPECT_EQ(ea[k].target, eb[k].target);
    EXPECT_EQ(ea[k].t_beta, eb[k].t_beta);
  }
}

TEST(BuildGraph, MaxPredictorsKeepsLargestAbsT) {
  const auto f = random_fixture(260, 40, 5, 33, 0.0);
  ScreenConfig all, capped;
  all.max_predictors.reset();
  all.tau = 0.01;
  capped.tau = 0.01;
  capped.max_predictors = 3;
  const auto ga = build_graph(f.source, f.targets, f.target, 255, Date(0), all);
  const auto gc = build_graph(f.source, f.targets, f.target, 255, Date(0), capped);
  for (std::size_t i = 0; i < 5; ++i) {
    auto edges = ga.in_edges[i];
    std::sort(edges.begin(), edges.end(), [&](const Edge& a, const Edge& b) {
      if (std::abs(a.t_beta) != std::abs(b.t_beta)) return std::abs(a.t_beta) > std::abs(b.t_beta);
      return ga.source_tickers[a.source] < ga.source_tickers[b.source];
    });
    std::set<int> want;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, edges.size()); ++k) want.insert(edges[k].source);
    std::set<int> got;
    for (const auto& e : gc.in_edges[i]) got.insert(e.source);
    EXPECT_EQ(got, want);
    for (std::size_t k = 1; k < gc.in_edges[i].size(); ++k)
      EXPECT_LT(gc.in_edges[i][k - 1].source, gc.in_edges[i][k].source);
  }
}

TEST(BuildGraph, InfiniteTauIsEmpty) {
  const auto f = random_fixture(260, 10, 5, 34, 1.0);
  ScreenConfig c;
  c.tau = std::numeric_limits<double>::infinity();
  EXPECT_EQ(build_graph(f.source, f.targets, f.target, 255, Date(0), c).edge_count(), 0u);
}

TEST(BuildGraph, PlantedPairRecovered) {
  auto f = random_fixture(260, 20, 1, 35, 0.0);
  std::mt19937_64 eng(1);
  std::normal_distribution<double> N(0, 0.1);
  for (Eigen::Index t = 0; t < 260; ++t) f.target(t, 0) = f.source.values(t, 7) + N(eng);
  ScreenConfig c;
  c.tau = 5.0;
  const auto g = build_graph(f.source, f.targets, f.target, 255, Date(0), c);
  ASSERT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges()[0].source, 7);
  EXPECT_GT(g.edges()[0].t_beta, 50.0);
}

TEST(BuildGraph, GapsSkipStocksAndReport) {
  auto f = random_fixture(260, 6, 3, 36, 0.0);
  f.source.values(100, 2) = std::numeric_limits<double>::quiet_NaN();
  f.target(200, 1) = std::numeric_limits<double>::quiet_NaN();
  ScreenConfig c;
  c.tau = 0.001;
  ScreenDiagnostics d;
  const auto g = build_graph(f.source, f.targets, f.target, 255, Date(0), c, 1, &d);
  EXPECT_EQ(d.skipped_sources, std::vector<std::string>{"S102"});
  EXPECT_EQ(d.skipped_targets, std::vector<std::string>{"T101"});
  EXPECT_FALSE(g.source_eligible[2]);
  EXPECT_TRUE(g.in_edges[1].empty());
  for (const auto& e : g.edges()) EXPECT_NE(e.source, 2);
}

TEST(BuildGraph, WindowBeforeAsOf) {
  auto f = random_fixture(300, 5, 2, 37, 0.0);
  ScreenConfig c;
  c.tau = 0.001;
  const auto a = build_graph(f.source, f.targets, f.target, 280, Date(0), c);
  // rows at and after the as-of row never enter the window
  for (Eigen::Index t = 280; t < 300; ++t) f.target.row(t).setConstant(1e6);
  const auto b = build_graph(f.source, f.targets, f.target, 280, Date(0), c);
  EXPECT_EQ(a.biadjacency(), b.biadjacency());
  EXPECT_THROW(build_graph(f.source, f.targets, f.target, 100, Date(0), c), Error);
}

TEST(BuildGraph, NullEdgeRateNearTailMass) {
  const auto f = random_fixture(260, 50, 50, 38, 0.0);
  ScreenConfig c;
  c.max_predictors.reset();
  c.winsorize = false;
  const auto g = build_graph(f.source, f.targets, f.target, 255, Date(0), c);
  const double rate = static_cast<double>(g.edge_count()) / 2500.0;
  const double p = 0.0466;  // two-sided t(248) mass beyond 2
  EXPECT_NEAR(rate, p, 4.0 * std::sqrt(p * (1 - p) / 2500.0));
}

TEST(BuildGraph, PanelOverloadPairsCalendars) {
  const auto us = testing::random_panel(300, 6, 40, "US", "SPY");
  const auto cn = testing::random_panel(300, 5, 41, "CN", "ETFC");
  const auto src = compute_returns(us, ReturnKind::pvCLCL);
  const auto tgt = compute_returns(cn, ReturnKind::OPCL);
  ScreenConfig c;
  c.lag = 1;
  c.tau = 0.0001;
  const auto g = build_graph(src, kUsSession, tgt, kCnSession, c, cn.dates[280]);
  EXPECT_EQ(g.source_tickers.size(), 6u);
  EXPECT_EQ(g.target_tickers.size(), 5u);
  EXPECT_EQ(g.as_of, cn.dates[280]);
  const auto aligned = align_source(src, kUsSession, tgt.dates, kCnSession, 1);
  const auto h = build_graph(aligned, tgt.tickers, tgt.values, 280, cn.dates[280], c);
  EXPECT_EQ(g.biadjacency(), h.biadjacency());
}

TEST(BuildGraph, BenjaminiHochbergOnlyRemovesEdges) {
  const auto f = random_fixture(260, 40, 10, 42, 0.2);
  ScreenConfig plain, bh;
  plain.max_predictors.reset();
  bh.max_predictors.reset();
  bh.bh_fdr = 0.05;
  const auto a = build_graph(f.source, f.targets, f.target, 255, Date(0), plain);
  const auto b = build_graph(f.source, f.targets, f.target, 255, Date(0), bh);
  EXPECT_LE(b.edge_count(), a.edge_count());
  const Matrix A = a.biadjacency(), B = b.biadjacency();
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.cols(); ++j)
      if (B(i, j) != 0) EXPECT_EQ(B(i, j), A(i, j));
}

TEST(ScreenConfig, Validation) {
  ScreenConfig c;
  c.window = 2;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.lag = -1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.tau = 0;
  EXPECT_THROW(c.validate(), Error);
}

BipartiteGraph graph_with_degrees(const std::vector<int>& degrees, int n_sources) {
  BipartiteGraph g;
  for (int j = 0; j < n_sources; ++j) g.source_tickers.push_back("S" + std::to_string(100 + j));
  g.source_eligible.assign(static_cast<std::size_t>(n_sources), 1);
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    g.target_tickers.push_back("T" + std::to_string(100 + i));
    std::vector<Edge> in;
    for (int k = 0; k < degrees[i]; ++k) in.push_back({k, static_cast<int>(i), 3.0 + k, false});
    g.in_edges.push_back(in);
  }
  return g;
}

TEST(InDegreePercentiles, Cases) {
  const auto empty = graph_with_degrees(std::vector<int>(10, 0), 5);
  EXPECT_EQ(in_degree_percentiles(empty), (std::array<double, 3>{0, 0, 0}));
  const auto three = graph_with_degrees(std::vector<int>(10, 3), 5);
  EXPECT_EQ(in_degree_percentiles(three), (std::array<double, 3>{3, 3, 3}));
  std::vector<int> deg(100);
  for (int i = 0; i < 100; ++i) deg[i] = (i * 37) % 100;
  const auto g = graph_with_degrees(deg, 100);
  std::vector<int> s = deg;
  std::sort(s.begin(), s.end());
  // 0..99: rank 99p/100 lands on 24.75, 49.5, 74.25
  const auto p = in_degree_percentiles(g);
  EXPECT_DOUBLE_EQ(p[0], 24.75);
  EXPECT_DOUBLE_EQ(p[1], 49.5);
  EXPECT_DOUBLE_EQ(p[2], 74.25);
}

TEST(TimeAverage, CasesAndOracle) {
  auto a = graph_with_degrees({1, 0}, 3);
  auto b = graph_with_degrees({0, 0}, 3);
  a.in_edges[0][0].t_beta = 4.0;
  b.in_edges[1].push_back({2, 1, 4.0, false});
  std::vector<BipartiteGraph> one{a};
  EXPECT_EQ(time_average_biadjacency(one), a.biadjacency());
  std::vector<BipartiteGraph> two{a, b};
  const Matrix m = time_average_biadjacency(two);
  EXPECT_EQ(m(0, 0), 2.0);
  EXPECT_EQ(m(1, 2), 2.0);
  EXPECT_EQ(m.sum(), 4.0);

  std::vector<BipartiteGraph> many;
  Matrix sum = Matrix::Zero(4, 6);
  for (int k = 0; k < 10; ++k) {
    const auto f = random_fixture(260, 6, 4, 100 + k, 0.2);
    ScreenConfig c;
    c.tau = 1.0;
    many.push_back(build_graph(f.source, f.targets, f.target, 255, Date(0), c));
    sum += many.back().biadjacency();
  }
  EXPECT_TRUE(time_average_biadjacency(many).isApprox(sum / 10.0, 1e-15));
  many[3].target_tickers[0] = "X";
  EXPECT_THROW(time_average_biadjacency(many), Error);
}

TEST(SectorBlock, CasesAndBruteForce) {
  Matrix m(1, 3);
  m << -3, 1, 2;
  const auto one = sector_block_median_abs(m, {"A", "A", "A"}, {"X"});
  EXPECT_EQ(one.values(0, 0), 2.0);

  std::mt19937_64 eng(50);
  std::normal_distribution<double> N;
  Matrix r(20, 20);
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = 0; j < 20; ++j) r(i, j) = N(eng);
  std::vector<std::string> ss, ts;
  for (int k = 0; k < 20; ++k) {
    ss.push_back("s" + std::to_string((k * 7) % 4));
    ts.push_back("t" + std::to_string((k * 3) % 4));
  }
  const auto sm = sector_block_median_abs(r, ss, ts);
  ASSERT_EQ(sm.target_sectors, (std::vector<std::string>{"t0", "t1", "t2", "t3"}));
  ASSERT_EQ(sm.source_sectors, (std::vector<std::string>{"s0", "s1", "s2", "s3"}));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      std::vector<double> block;
      for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
          if (ts[i] == sm.target_sectors[a] && ss[j] == sm.source_sectors[b]) block.push_back(std::abs(r(i, j)));
      std::sort(block.begin(), block.end());
      const std::size_t n = block.size();
      const double med = n % 2 ? block[n / 2] : 0.5 * (block[n / 2 - 1] + block[n / 2]);
      EXPECT_DOUBLE_EQ(sm.values(a, b), med);
    }
  ss[4] = "";
  EXPECT_THROW(sector_block_median_abs(r, ss, ts), Error);
}

TEST(RandomizeEdges, FractionZeroIsIdentity) {
  const auto g = graph_with_degrees({4, 2, 0, 3}, 12);
  const auto r = randomize_edges(g, 0.0, 9);
  EXPECT_EQ(r.biadjacency(), g.biadjacency());
  for (const auto& e : r.edges()) EXPECT_FALSE(e.synthetic);
}

TEST(RandomizeEdges, FullReplacementKeepsDegrees) {
  const auto g = graph_with_degrees({4, 2, 0, 3}, 12);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = randomize_edges(g, 1.0, seed);
    EXPECT_EQ(r.in_degrees(), g.in_degrees());
    const Matrix A = g.biadjacency(), B = r.biadjacency();
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j) EXPECT_FALSE(A(i, j) != 0 && B(i, j) != 0);
    for (const auto& e : r.edges()) EXPECT_TRUE(e.synthetic);
  }
}

TEST(RandomizeEdges, HalfOfFourReplacesTwo) {
  const auto g = graph_with_degrees({4}, 20);
  std::set<std::vector<int>> distinct;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto r = randomize_edges(g, 0.5, seed);
    ASSERT_EQ(r.in_degrees(), g.in_degrees());
    int kept = 0, synthetic = 0;
    std::vector<int> srcs;
    for (const auto& e : r.in_edges[0]) {
      srcs.push_back(e.source);
      if (e.synthetic) ++synthetic;
      else if (e.source < 4) ++kept;
    }
    EXPECT_EQ(kept, 2);
    EXPECT_EQ(synthetic, 2);
    distinct.insert(srcs);
  }
  EXPECT_GT(distinct.size(), 20u);
  EXPECT_EQ(randomize_edges(g, 0.5, 3).biadjacency(), randomize_edges(g, 0.5, 3).biadjacency());
}

TEST(RandomizeEdges, RoundHalfUpAndIneligibleSources) {
  auto g = graph_with_degrees({3}, 10);
  // 0.5 * 3 = 1.5 -> 2
  int synthetic = 0;
  const auto half = randomize_edges(g, 0.5, 1);
  for (const auto& e : half.in_edges[0]) synthetic += e.synthetic;
  EXPECT_EQ(synthetic, 2);
  for (int j = 3; j < 10; ++j) g.source_eligible[j] = j == 9;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto r = randomize_edges(g, 0.3, s);
    for (const auto& e : r.in_edges[0])
      if (e.synthetic) EXPECT_EQ(e.source, 9);
  }
  EXPECT_THROW(randomize_edges(g, 1.0, 0), Error);
}

}  // namespace
}  // namespace xmkt

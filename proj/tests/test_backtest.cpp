#include "xmkt/backtest.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "xmkt/error.hpp"
#include "xmkt/synthetic.hpp"

namespace xmkt {
namespace {

TEST(DailyPnl, HandValue) {
  const double cap = position_size(2e8, 0.001, 1e5);
  EXPECT_EQ(cap, 1e5);
  EXPECT_EQ(position_size(2e7, 0.001, 1e5), 2e4);
  const std::vector<double> s{0.01}, r{0.02}, b{cap};
  EXPECT_DOUBLE_EQ(daily_pnl(s, r, b), 2000.0);
}

TEST(DailyPnl, ZeroSignalAndAntisymmetry) {
  const std::vector<double> s{0.0, 0.3, -0.2}, r{0.05, -0.01, -0.03}, b{1e5, 2e5, 3e5};
  EXPECT_DOUBLE_EQ(daily_pnl(s, r, b), -0.01 * 2e5 + 0.03 * 3e5);
  const std::vector<double> neg{0.0, -0.3, 0.2};
  EXPECT_DOUBLE_EQ(daily_pnl(neg, r, b), -daily_pnl(s, r, b));
  const std::vector<double> short_b{1.0};
  EXPECT_THROW(daily_pnl(s, r, short_b), Error);
}

TEST(Sharpe, Cases) {
  std::vector<double> alt;
  for (int i = 0; i < 100; ++i) alt.push_back(i % 2 ? 1.0 : -1.0);
  EXPECT_NEAR(sharpe_ratio(alt), 0.0, 1e-15);
  const std::vector<double> flat(50, 3.0);
  EXPECT_THROW(sharpe_ratio(flat), Error);
  EXPECT_TRUE(std::isnan(sharpe_or_nan(flat)));
  EXPECT_THROW(sharpe_ratio(std::vector<double>{1.0}), Error);

  std::mt19937_64 eng(1);
  std::normal_distribution<double> N(0.1, 1.0);
  std::vector<double> v(1000000);
  for (auto& x : v) x = N(eng);
  EXPECT_NEAR(sharpe_ratio(v), 0.1 * std::sqrt(252.0), 0.05);
}

TEST(Portfolios, QuantileSizesForTenStocks) {
  const std::vector<double> f{1.0, 0.8, 0.6, 0.4, 0.2, 0.1};
  EXPECT_EQ(quantile_sizes(10, f), (std::vector<std::size_t>{10, 8, 6, 4, 2, 1}));
  EXPECT_EQ(quantile_sizes(7, f), (std::vector<std::size_t>{7, 6, 5, 3, 2, 1}));
  EXPECT_EQ(quantile_sizes(0, f), (std::vector<std::size_t>(6, 0)));
}

TEST(Portfolios, TiesGoToFirstTickers) {
  const std::vector<double> p{0.5, -0.5, 0.5, 0.1, -0.5};
  const std::vector<std::string> t{"E", "B", "D", "A", "C"};
  const std::vector<double> f{1.0, 0.4};
  const auto q = quantile_portfolios(p, t, f);
  EXPECT_EQ(q[0], (std::vector<std::string>{"B", "C", "D", "E", "A"}));
  EXPECT_EQ(q[1], (std::vector<std::string>{"B", "C"}));
}

struct Run {
  SyntheticMarkets m;
  BacktestData data;
  FeaturePlan plan;
  BacktestConfig config;
  std::vector<ModelSpec> specs;
};

Run small_run() {
  PlantedSpec s;
  s.n_source = 10;
  s.n_target = 8;
  s.n_dates = 150;
  s.edge_density = 0.3;
  s.seed = 11;
  Run r;
  r.m = generate(s);
  r.data = make_backtest_data(r.m.target);
  ScreenConfig screen;
  screen.window = 60;
  screen.lag = 1;
  const auto src = drop_ticker(excess_returns(r.m.source, ReturnKind::pvCLCL), "SPY");
  r.plan.blocks.push_back({"US", align_source(src, kUsSession, r.data.dates, kCnSession, 1), screen});
  r.config.window = 60;
  r.config.position_cap = 1.5e6;
  r.specs = {ModelSpec::defaults(Method::OLS), ModelSpec::defaults(Method::RIDGE),
             ModelSpec::defaults(Method::LASSO)};
  return r;
}

TEST(Backtest, SingleBuildForShortSpan) {
  auto r = small_run();
  r.config.span_days = 10;
  const auto rep = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  EXPECT_EQ(rep.dates.size(), 10u);
  EXPECT_EQ(rep.rebuilds.size(), 1u);
  EXPECT_EQ(rep.models.size(), 3u);
  r.config.span_days = 11;
  EXPECT_EQ(run_backtest(r.data, r.plan, r.specs, r.config, 1).rebuilds.size(), 2u);
}

TEST(Backtest, SeriesAreConsistent) {
  const auto r = small_run();
  const auto rep = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  ASSERT_FALSE(rep.dates.empty());
  for (const auto& ms : rep.models) {
    for (std::size_t q = 0; q < rep.quantile_fractions.size(); ++q) {
      double acc = 0;
      for (std::size_t d = 0; d < rep.dates.size(); ++d) {
        acc += ms.daily[q][d];
        EXPECT_NEAR(ms.cumulative[q][d], acc, 1e-9 * (1 + std::abs(acc)));
      }
      const double sr = sharpe_or_nan(ms.daily[q]);
      if (std::isnan(sr)) EXPECT_TRUE(std::isnan(ms.sharpe[q]));
      else EXPECT_NEAR(ms.sharpe[q], sr, 1e-12);
    }
    for (std::size_t d = 0; d < rep.dates.size(); ++d) {
      const auto& recs = ms.records[d];
      const auto sizes = quantile_sizes(recs.size(), rep.quantile_fractions);
      for (std::size_t q = 0; q < sizes.size(); ++q) {
        double pnl = 0;
        for (std::size_t k = 0; k < sizes[q]; ++k) pnl += recs[k].pnl;
        EXPECT_DOUBLE_EQ(ms.daily[q][d], pnl);
        if (q > 0) EXPECT_LE(sizes[q], sizes[q - 1]);
      }
      for (std::size_t k = 1; k < recs.size(); ++k) {
        EXPECT_GE(std::abs(recs[k - 1].prediction), std::abs(recs[k].prediction));
      }
      for (const auto& rec : recs) {
        EXPECT_EQ(rec.realized, r.data.returns(static_cast<Eigen::Index>(d) +
                                                   (std::lower_bound(r.data.dates.begin(), r.data.dates.end(),
                                                                     rep.dates[0]) - r.data.dates.begin()),
                                               rec.stock));
        EXPECT_LE(rec.capital, r.config.position_cap);
      }
    }
  }
}

TEST(Backtest, NoLookAhead) {
  auto r = small_run();
  const auto base = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  const auto start = static_cast<Eigen::Index>(prediction_span(r.data, r.plan, r.config).start);
  const Eigen::Index k = start + 15;
  auto& y = r.data.returns;
  auto& x = r.plan.blocks[0].aligned.values;
  std::mt19937_64 eng(3);
  std::normal_distribution<double> N(0, 0.05);
  for (Eigen::Index t = k; t < y.rows(); ++t) {
    for (Eigen::Index i = 0; i < y.cols(); ++i) y(t, i) = N(eng);
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(t, j) = N(eng);
  }
  const auto pert = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  for (std::size_t m = 0; m < base.models.size(); ++m)
    for (std::size_t d = 0; d < 15; ++d) {
      const auto& a = base.models[m].records[d];
      const auto& b = pert.models[m].records[d];
      ASSERT_EQ(a.size(), b.size());
      for (std::size_t s = 0; s < a.size(); ++s) {
        EXPECT_EQ(a[s].stock, b[s].stock);
        EXPECT_EQ(a[s].prediction, b[s].prediction);
        EXPECT_EQ(a[s].pnl, b[s].pnl);
      }
    }
  bool changed = false;
  for (std::size_t d = 15; d < base.dates.size(); ++d)
    changed |= base.models[0].daily[0][d] != pert.models[0].daily[0][d];
  EXPECT_TRUE(changed);
}

TEST(Backtest, CapitalScaleLeavesSharpe) {
  auto r = small_run();
  r.config.position_cap = 1000.0;  // below every bps * mdv
  const auto a = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  r.config.position_cap = 7000.0;
  const auto b = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  for (std::size_t m = 0; m < a.models.size(); ++m)
    for (std::size_t q = 0; q < a.quantile_fractions.size(); ++q) {
      EXPECT_NEAR(a.models[m].sharpe[q], b.models[m].sharpe[q], 1e-12);
      EXPECT_NEAR(7.0 * a.models[m].daily[q][3], b.models[m].daily[q][3], 1e-9);
    }
}

TEST(Backtest, CapitalMonotoneInCap) {
  auto r = small_run();
  r.config.position_cap = 2e4;
  const auto a = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  r.config.position_cap = 5e4;
  const auto b = run_backtest(r.data, r.plan, r.specs, r.config, 1);
  for (std::size_t d = 0; d < a.dates.size(); ++d) {
    const auto& ra = a.models[0].records[d];
    const auto& rb = b.models[0].records[d];
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t s = 0; s < ra.size(); ++s) EXPECT_LE(ra[s].capital, rb[s].capital);
  }
}

TEST(Backtest, EnsemblesAppendedForBaseSet) {
  auto r = small_run();
  r.config.span_days = 5;
  const auto rep = run_backtest(r.data, r.plan, default_model_specs(), r.config, 1);
  ASSERT_EQ(rep.models.size(), 10u);
  EXPECT_EQ(rep.models[8].name, "ENS_AVG");
  EXPECT_EQ(rep.models[9].name, "ENS_MED");
  for (std::size_t d = 0; d < rep.dates.size(); ++d) {
    const auto& avg = rep.models[8].records[d];
    for (const auto& rec : avg) {
      double s = 0;
      for (std::size_t m = 0; m < 8; ++m)
        for (const auto& o : rep.models[m].records[d])
          if (o.stock == rec.stock) s += o.prediction;
      EXPECT_NEAR(rec.prediction, s / 8.0, 1e-15 + 1e-12 * std::abs(s));
    }
  }
}

TEST(Backtest, WorkersDoNotChangeOutput) {
  auto r = small_run();
  r.config.span_days = 20;
  r.specs.push_back(ModelSpec::defaults(Method::RF));
  const auto a = run_backtest(r.data, r.plan, r.specs, r.config, 5, 1);
  const auto b = run_backtest(r.data, r.plan, r.specs, r.config, 5, 4);
  for (std::size_t m = 0; m < a.models.size(); ++m) EXPECT_EQ(a.models[m].daily, b.models[m].daily);
}

TEST(Backtest, SpanErrors) {
  auto r = small_run();
  r.config.start = r.data.dates[10];
  EXPECT_THROW(prediction_span(r.data, r.plan, r.config), Error);
  r.config.start.reset();
  r.config.window = 500;
  r.plan.blocks[0].screen.window = 500;
  EXPECT_THROW(run_backtest(r.data, r.plan, r.specs, r.config, 1), Error);
  r = small_run();
  r.plan.blocks[0].screen.window = 50;
  EXPECT_THROW(prediction_span(r.data, r.plan, r.config), Error);
}

TEST(Backtest, AutoregressivePlan) {
  auto r = small_run();
  FeaturePlan ar;
  ar.kind = FeaturePlan::Kind::Autoregressive;
  ar.ar_returns = reindex_rows(select_tickers(excess_returns(r.m.target, ReturnKind::pvCLCL), r.data.tickers),
                               r.data.dates);
  ar.ar_lags = 5;
  r.config.span_days = 12;
  const auto rep = run_backtest(r.data, ar, r.specs, r.config, 1);
  EXPECT_EQ(rep.dates.size(), 12u);
  EXPECT_EQ(rep.models[0].records[0].size(), r.data.tickers.size());
}

TEST(DefaultCap, ByMarket) {
  EXPECT_EQ(default_position_cap("CN"), 1.5e6);
  EXPECT_EQ(default_position_cap("US"), 1e5);
}

}  // namespace
}  // namespace xmkt

#include "xmkt/experiments.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

#include "xmkt/error.hpp"
#include "xmkt/stats.hpp"

namespace xmkt {

namespace {

constexpr std::array<std::string_view, 10> kKindNames = {
    "CROSS_US_CN",        "CROSS_CN_US", "BASELINE_NONGRAPH", "BASELINE_GRAPH_SAME", "EDGE_RANDOMIZATION",
    "LAG_SWEEP",          "HYPERPARAM_GRID", "SHOCK_CONDITIONAL", "SECTOR_BREAKDOWN", "COMBINED_PREDICTORS"};

const MarketInput& market(const ExperimentContext& ctx, Market m) { return m == Market::US ? ctx.us : ctx.cn; }

const std::vector<std::string>& targets_of(const ExperimentContext& ctx, Market m) {
  return m == Market::US ? ctx.us_targets : ctx.cn_targets;
}

void check(const MarketInput& m) {
  if (!m.prices) throw Error(ErrorCode::PlanError, "experiment is missing a market panel");
}

BacktestConfig config_for(const ExperimentContext& ctx, const PricePanel& target) {
  BacktestConfig c = ctx.backtest;
  if (ctx.auto_position_cap) c.position_cap = default_position_cap(target.market_id);
  return c;
}

// Own-market returns of every non-ETF ticker (or a universe).
ReturnPanel feature_returns(const PricePanel& p, ReturnKind kind) {
  return drop_ticker(excess_returns(p, kind), p.etf_ticker);
}

SourceBlock make_block(std::string name, const MarketInput& source, ReturnKind kind, const BacktestData& data,
                       const MarketInput& target, ScreenConfig screen, int lag) {
  screen.lag = lag;
  return {std::move(name), align_source(feature_returns(*source.prices, kind), source.session, data.dates,
                                        target.session, lag),
          screen};
}

std::vector<double> median_row(const BacktestReport& r) {
  std::vector<double> out;
  for (std::size_t q = 0; q < r.quantile_fractions.size(); ++q) out.push_back(median_sharpe(r, q));
  return out;
}

template <class Run>
SweepTable sweep(const ExperimentContext& ctx, std::string name, const std::vector<double>& values,
                 const std::vector<std::uint64_t>& seeds, const CellObserver& observe, Run run) {
  if (values.empty() || seeds.empty()) throw Error(ErrorCode::PlanError, "sweep needs values and seeds");
  SweepTable t;
  t.parameter = std::move(name);
  t.values = values;
  t.seeds = seeds;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::vector<std::vector<double>> per_seed;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      ExperimentContext c = ctx;
      c.seed = seeds[k];
      const auto report = run(c, values[i]);
      if (observe) observe(i, k, report);
      per_seed.push_back(median_row(report));
    }
    std::vector<double> mean(per_seed.front().size(), 0.0);
    for (const auto& row : per_seed)
      for (std::size_t q = 0; q < row.size(); ++q) mean[q] += row[q] / static_cast<double>(per_seed.size());
    t.median_sr.push_back(std::move(per_seed));
    t.mean_median_sr.push_back(std::move(mean));
  }
  return t;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

ExperimentKind parse_experiment_kind(std::string_view text) {
  std::string up(text);
  for (auto& c : up) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == up) return static_cast<ExperimentKind>(i);
  throw Error(ErrorCode::PlanError, "unknown experiment kind '" + std::string(text) + "'");
}

int direction_lag(Direction d) { return d == Direction::UsToCn ? 1 : 0; }

DirectionSetup setup_direction(const ExperimentContext& ctx, Direction direction, ReturnKind feature_kind,
                               std::optional<int> lag, std::optional<double> randomize_fraction) {
  const MarketInput& src = direction == Direction::UsToCn ? ctx.us : ctx.cn;
  const MarketInput& tgt = direction == Direction::UsToCn ? ctx.cn : ctx.us;
  check(src);
  check(tgt);
  DirectionSetup s;
  s.data = make_backtest_data(*tgt.prices, targets_of(ctx, direction == Direction::UsToCn ? Market::CN : Market::US));
  s.plan.blocks.push_back(make_block("source", src, feature_kind, s.data, tgt, ctx.screen,
                                     lag.value_or(direction_lag(direction))));
  s.plan.randomize_fraction = randomize_fraction;
  s.config = config_for(ctx, *tgt.prices);
  return s;
}

BacktestReport run_direction(const ExperimentContext& ctx, Direction direction, ReturnKind feature_kind,
                             std::optional<int> lag, std::optional<double> randomize_fraction) {
  const auto s = setup_direction(ctx, direction, feature_kind, lag, randomize_fraction);
  return run_backtest(s.data, s.plan, ctx.specs, s.config, ctx.seed, ctx.workers);
}

BacktestReport run_baseline_nongraph(const ExperimentContext& ctx, Market target, ReturnKind feature_kind) {
  const MarketInput& tgt = market(ctx, target);
  check(tgt);
  const auto data = make_backtest_data(*tgt.prices, targets_of(ctx, target));
  FeaturePlan plan;
  plan.kind = FeaturePlan::Kind::Autoregressive;
  const ReturnPanel own = select_tickers(excess_returns(*tgt.prices, feature_kind), data.tickers);
  plan.ar_returns = reindex_rows(own, data.dates);
  return run_backtest(data, plan, ctx.specs, config_for(ctx, *tgt.prices), ctx.seed, ctx.workers);
}

BacktestReport run_baseline_graph_same(const ExperimentContext& ctx, Market target, ReturnKind feature_kind) {
  const MarketInput& tgt = market(ctx, target);
  check(tgt);
  const auto data = make_backtest_data(*tgt.prices, targets_of(ctx, target));
  FeaturePlan plan;
  plan.blocks.push_back(make_block("same", tgt, feature_kind, data, tgt, ctx.screen, 1));
  return run_backtest(data, plan, ctx.specs, config_for(ctx, *tgt.prices), ctx.seed, ctx.workers);
}

SweepTable run_edge_randomization(const ExperimentContext& ctx, const std::vector<double>& fractions,
                                  const std::vector<std::uint64_t>& seeds, const CellObserver& observe) {
  for (double f : fractions)
    if (!(f >= 0 && f <= 1)) throw Error(ErrorCode::PlanError, "randomization fractions must lie in [0, 1]");
  return sweep(ctx, "fraction", fractions, seeds, observe, [](const ExperimentContext& c, double f) {
    return run_direction(c, Direction::UsToCn, ReturnKind::pvCLCL, {}, f);
  });
}

SweepTable run_lag_sweep(const ExperimentContext& ctx, const std::vector<int>& lags,
                         const std::vector<std::uint64_t>& seeds, const CellObserver& observe) {
  std::vector<double> values(lags.begin(), lags.end());
  return sweep(ctx, "lag", values, seeds, observe, [](const ExperimentContext& c, double l) {
    return run_direction(c, Direction::UsToCn, ReturnKind::pvCLCL, static_cast<int>(l));
  });
}

GridTable run_hyperparam_grid(const ExperimentContext& ctx, int span_days,
                              std::map<Method, std::vector<ModelSpec>> grids) {
  GridTable t;
  for (Method m : kBaseMethods) {
    if (m == Method::OLS) continue;
    if (!grids.empty() && !grids.count(m)) continue;
    t.methods.push_back(m);
  }
  ExperimentContext base = ctx;
  if (span_days > 0) base.backtest.span_days = span_days;
  const std::size_t Q = ctx.backtest.quantile_fractions.size();
  for (Method m : t.methods) {
    const auto cells_spec = grids.count(m) ? grids.at(m) : hyperparameter_grid(m);
    std::vector<GridCell> cells;
    for (const auto& spec : cells_spec) {
      GridCell cell{spec, std::vector<double>(Q, std::numeric_limits<double>::quiet_NaN()), {}};
      try {
        ExperimentContext c = base;
        c.specs = {spec};
        cell.sharpe = run_direction(c, Direction::UsToCn, ReturnKind::pvCLCL).models.front().sharpe;
      } catch (const Error& e) {
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
    std::vector<double> mean(Q), sd(Q);
    for (std::size_t q = 0; q < Q; ++q) {
      std::vector<double> v;
      for (const auto& c : cells)
        if (c.error.empty() && !std::isnan(c.sharpe[q])) v.push_back(c.sharpe[q]);
      if (v.empty()) {
        mean[q] = sd[q] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      mean[q] = stats::mean(v);
      double ss = 0;
      for (double x : v) ss += (x - mean[q]) * (x - mean[q]);
      sd[q] = std::sqrt(ss / static_cast<double>(v.size()));
    }
    t.cells.push_back(std::move(cells));
    t.mean.push_back(std::move(mean));
    t.sd.push_back(std::move(sd));
  }
  return t;
}

ShockTable run_shock_conditional(const BacktestReport& report, const ReturnSeries& source_etf,
                                 Session source_session, Session target_session, int lag,
                                 const std::vector<double>& fractions, std::size_t portfolio_quantile) {
  const std::size_t D = report.dates.size();
  if (D == 0) throw Error(ErrorCode::EmptySubset, "report has no prediction days");
  const auto pairing = pair_dates(source_etf.dates, source_session, report.dates, target_session, lag);
  std::vector<double> shock(D, -1.0);
  for (std::size_t u = 0; u < D; ++u) {
    if (pairing[u] < 0) continue;
    const double v = source_etf.values[static_cast<std::size_t>(pairing[u])];
    if (!std::isnan(v)) shock[u] = std::abs(v);
  }
  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return shock[a] > shock[b]; });

  ShockTable t;
  t.fractions = fractions;
  t.subset_days = quantile_sizes(D, fractions);
  for (const auto& m : report.models) {
    t.models.push_back(m.name);
    const auto& daily = m.daily.at(portfolio_quantile);
    std::vector<double> row;
    for (std::size_t size : t.subset_days) {
      if (size == 0) throw Error(ErrorCode::EmptySubset, "shock subset is empty");
      std::vector<std::size_t> days(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size));
      std::sort(days.begin(), days.end());
      std::vector<double> series;
      series.reserve(size);
      for (auto d : days) series.push_back(daily[d]);
      row.push_back(sharpe_or_nan(series));
    }
    t.sharpe.push_back(std::move(row));
  }
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    std::vector<double> v;
    for (const auto& row : t.sharpe) v.push_back(std::isnan(row[k]) ? 0.0 : row[k]);
    t.median.push_back(stats::median(v));
  }
  return t;
}

std::map<std::string, std::string> sector_map(const PricePanel& panel) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < panel.tickers.size(); ++i)
    out[panel.tickers[i]] = i < panel.sector.size() ? panel.sector[i] : std::string{};
  return out;
}

SectorTable run_sector_breakdown(const BacktestReport& report, const std::map<std::string, std::string>& sector_of) {
  SectorTable t;
  std::vector<std::string> label(report.tickers.size());
  for (std::size_t i = 0; i < report.tickers.size(); ++i) {
    const auto it = sector_of.find(report.tickers[i]);
    if (it == sector_of.end() || it->second.empty())
      throw Error(ErrorCode::UnlabeledTicker, "no sector for " + report.tickers[i], report.tickers[i]);
    label[i] = it->second;
  }
  t.sectors = label;
  std::sort(t.sectors.begin(), t.sectors.end());
  t.sectors.erase(std::unique(t.sectors.begin(), t.sectors.end()), t.sectors.end());
  std::vector<std::size_t> sector_index(label.size());
  for (std::size_t i = 0; i < label.size(); ++i)
    sector_index[i] =
        static_cast<std::size_t>(std::lower_bound(t.sectors.begin(), t.sectors.end(), label[i]) - t.sectors.begin());

  const std::size_t S = t.sectors.size(), Q = report.quantile_fractions.size(), D = report.dates.size();
  for (const auto& m : report.models) {
    t.models.push_back(m.name);
    std::vector<std::vector<std::vector<double>>> daily(S, std::vector<std::vector<double>>(Q, std::vector<double>(D, 0.0)));
    for (std::size_t d = 0; d < D; ++d) {
      const auto& recs = m.records[d];
      const auto sizes = quantile_sizes(recs.size(), report.quantile_fractions);
      for (std::size_t q = 0; q < Q; ++q)
        for (std::size_t k = 0; k < sizes[q]; ++k) daily[sector_index[recs[k].stock]][q][d] += recs[k].pnl;
    }
    std::vector<std::vector<double>> sr(S, std::vector<double>(Q));
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t q = 0; q < Q; ++q) sr[s][q] = sharpe_or_nan(daily[s][q]);
    t.daily.push_back(std::move(daily));
    t.sharpe.push_back(std::move(sr));
  }
  return t;
}

std::vector<CombinedRun> run_combined_predictors(const ExperimentContext& ctx,
                                                 std::vector<std::pair<ReturnKind, ReturnKind>> combos,
                                                 std::optional<double> cn_tau) {
  check(ctx.us);
  check(ctx.cn);
  const auto data = make_backtest_data(*ctx.cn.prices, ctx.cn_targets);
  std::vector<CombinedRun> out;
  for (const auto& [us_kind, cn_kind] : combos) {
    FeaturePlan plan;
    plan.blocks.push_back(make_block("us", ctx.us, us_kind, data, ctx.cn, ctx.screen, 1));
    ScreenConfig cn_screen = ctx.screen;
    if (cn_tau) cn_screen.tau = *cn_tau;
    plan.blocks.push_back(make_block("cn", ctx.cn, cn_kind, data, ctx.cn, cn_screen, 1));
    out.push_back({us_kind, cn_kind,
                   run_backtest(data, plan, ctx.specs, config_for(ctx, *ctx.cn.prices), ctx.seed, ctx.workers)});
  }
  return out;
}

}  // namespace xmkt

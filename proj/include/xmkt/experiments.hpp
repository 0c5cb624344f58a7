#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xmkt/backtest.hpp"
#include "xmkt/calendar.hpp"
#include "xmkt/market_data.hpp"
#include "xmkt/models.hpp"
#include "xmkt/screening.hpp"

namespace xmkt {

enum class ExperimentKind {
  CROSS_US_CN,
  CROSS_CN_US,
  BASELINE_NONGRAPH,
  BASELINE_GRAPH_SAME,
  EDGE_RANDOMIZATION,
  LAG_SWEEP,
  HYPERPARAM_GRID,
  SHOCK_CONDITIONAL,
  SECTOR_BREAKDOWN,
  COMBINED_PREDICTORS,
};

std::string_view to_string(ExperimentKind kind) noexcept;
/// Accepts the enum spelling in any case; throws PlanError.
ExperimentKind parse_experiment_kind(std::string_view text);

struct MarketInput {
  const PricePanel* prices = nullptr;
  Session session;
};

/// The "us" market closes before the "cn" market's next open; the main
/// direction predicts cn from us.
struct ExperimentContext {
  MarketInput us;
  MarketInput cn;
  ScreenConfig screen;       // lag is set per experiment
  BacktestConfig backtest;
  bool auto_position_cap = true;  // cap from the target market id
  std::vector<ModelSpec> specs = default_model_specs();
  std::vector<std::string> us_targets;  // empty: every non-ETF ticker
  std::vector<std::string> cn_targets;
  std::uint64_t seed = 0;
  int workers = 1;
};

enum class Direction { UsToCn, CnToUs };
enum class Market { US, CN };

/// 1 for US -> CN, 0 for CN -> US.
int direction_lag(Direction d);

/// Target data, single-block graph plan and backtest config of a
/// cross-market run.
struct DirectionSetup {
  BacktestData data;
  FeaturePlan plan;
  BacktestConfig config;
};
DirectionSetup setup_direction(const ExperimentContext& ctx, Direction direction, ReturnKind feature_kind,
                               std::optional<int> lag = {}, std::optional<double> randomize_fraction = {});

BacktestReport run_direction(const ExperimentContext& ctx, Direction direction, ReturnKind feature_kind,
                             std::optional<int> lag = {}, std::optional<double> randomize_fraction = {});

/// The target's own previous 25 returns as features.
BacktestReport run_baseline_nongraph(const ExperimentContext& ctx, Market target, ReturnKind feature_kind);

/// Screening within the target market at lag 1.
BacktestReport run_baseline_graph_same(const ExperimentContext& ctx, Market target,
                                       ReturnKind feature_kind = ReturnKind::pvCLCL);

/// One parameter value x seed per cell; each cell keeps the median SR across
/// methods per quantile.
struct SweepTable {
  std::string parameter;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<std::vector<double>>> median_sr;  // [value][seed][quantile]
  std::vector<std::vector<double>> mean_median_sr;          // [value][quantile], mean over seeds
};

/// Called with (value index, seed index, report) after every sweep cell.
using CellObserver = std::function<void(std::size_t, std::size_t, const BacktestReport&)>;

/// US -> CN pvCLCL runs with randomize_edges at every rebuild.
SweepTable run_edge_randomization(const ExperimentContext& ctx, const std::vector<double>& fractions,
                                  const std::vector<std::uint64_t>& seeds, const CellObserver& observe = {});

/// US -> CN pvCLCL runs at each lag (screening and prediction).
SweepTable run_lag_sweep(const ExperimentContext& ctx, const std::vector<int>& lags,
                         const std::vector<std::uint64_t>& seeds, const CellObserver& observe = {});

struct GridCell {
  ModelSpec spec;
  std::vector<double> sharpe;  // [quantile]; NaN when undefined
  std::string error;           // non-empty when the cell failed
};

struct GridTable {
  std::vector<Method> methods;
  std::vector<std::vector<GridCell>> cells;  // [method][cell]
  std::vector<std::vector<double>> mean;     // [method][quantile]
  std::vector<std::vector<double>> sd;       // population sd over cells
};

/// Every grid cell is a single-model US -> CN pvCLCL backtest over
/// `span_days` (0: full span). `grids` replaces the default grid per method.
GridTable run_hyperparam_grid(const ExperimentContext& ctx, int span_days = 250,
                              std::map<Method, std::vector<ModelSpec>> grids = {});

struct ShockTable {
  std::vector<double> fractions;
  std::vector<std::string> models;
  std::vector<std::size_t> subset_days;     // [shock quantile]
  std::vector<std::vector<double>> sharpe;  // [model][shock quantile]
  std::vector<double> median;               // [shock quantile], undefined SRs count as 0
};

/// Ranks prediction days by |source ETF pvCLCL| on the source date paired
/// with them (same rule as screening) and recomputes the SR of portfolio
/// `portfolio_quantile` on each nested subset, chronologically ordered.
/// Unpaired days rank last, so the first subset is always every day.
ShockTable run_shock_conditional(const BacktestReport& report, const ReturnSeries& source_etf,
                                 Session source_session, Session target_session, int lag,
                                 const std::vector<double>& fractions = {1.0, 0.8, 0.6, 0.4, 0.2, 0.1},
                                 std::size_t portfolio_quantile = 0);

struct SectorTable {
  std::vector<std::string> sectors;  // ascending
  std::vector<std::string> models;
  std::vector<std::vector<std::vector<std::vector<double>>>> daily;  // [model][sector][quantile][day]
  std::vector<std::vector<std::vector<double>>> sharpe;              // [model][sector][quantile]
};

/// Splits each portfolio's daily PnL by target sector. `sector_of` maps
/// ticker -> label; throws UnlabeledTicker for a missing or empty label.
SectorTable run_sector_breakdown(const BacktestReport& report, const std::map<std::string, std::string>& sector_of);

/// Ticker -> sector label of a panel.
std::map<std::string, std::string> sector_map(const PricePanel& panel);

struct CombinedRun {
  ReturnKind us_kind;
  ReturnKind cn_kind;
  BacktestReport report;
};

/// Predicts cn OPCL from us returns (lag 1) plus cn's own returns (lag 1),
/// screened as two blocks. Default combos are the four kind pairs.
/// `cn_tau` overrides the cn block threshold.
std::vector<CombinedRun> run_combined_predictors(
    const ExperimentContext& ctx,
    std::vector<std::pair<ReturnKind, ReturnKind>> combos = {{ReturnKind::pvCLCL, ReturnKind::pvCLCL},
                                                             {ReturnKind::pvCLCL, ReturnKind::OPCL},
                                                             {ReturnKind::OPCL, ReturnKind::pvCLCL},
                                                             {ReturnKind::OPCL, ReturnKind::OPCL}},
    std::optional<double> cn_tau = {});

}  // namespace xmkt

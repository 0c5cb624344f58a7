#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmkt/market_data.hpp"
#include "xmkt/models.hpp"
#include "xmkt/screening.hpp"

namespace xmkt {

struct BacktestConfig {
  int window = 250;       // training rows per fit
  int retrain_every = 10; // target trading days between rebuilds
  std::vector<double> quantile_fractions = {1.0, 0.8, 0.6, 0.4, 0.2, 0.1};
  double position_cap = 100000.0;  // L, target-market currency
  double bps_of_mdv = 0.001;
  std::optional<Date> start;      // first prediction date; default: earliest with a full window
  std::optional<Date> end;        // last prediction date; default: last date
  std::optional<int> span_days;   // truncates the prediction span
  bool winsorize_training = true; // clip training X columns and y

  /// Throws InvalidConfig.
  void validate() const;
};

/// 1,500,000 for CN, 100,000 otherwise.
double default_position_cap(std::string_view market_id);

/// Predictors screened from one source universe.
struct SourceBlock {
  std::string name;
  AlignedSource aligned;  // already paired onto the target calendar at the block's lag
  ScreenConfig screen;
};

struct FeaturePlan {
  enum class Kind { Graph, Autoregressive };
  Kind kind = Kind::Graph;
  std::vector<SourceBlock> blocks;           // Graph
  Matrix ar_returns;                          // Autoregressive: targets' own returns on target dates
  int ar_lags = 25;
  std::optional<double> randomize_fraction;   // Graph: randomize_edges at every rebuild
};

/// Target market returns to predict, aligned with the price panel's dates.
struct BacktestData {
  const PricePanel* prices = nullptr;
  std::vector<std::string> tickers;
  std::vector<Date> dates;
  Matrix returns;  // excess OPCL, dates x tickers
};

/// Excess OPCL of every non-ETF ticker (or the listed ones).
BacktestData make_backtest_data(const PricePanel& prices, const std::vector<std::string>& tickers = {});

struct StockRecord {
  int stock = 0;  // index into BacktestReport::tickers
  double prediction = 0.0;
  double realized = 0.0;
  double capital = 0.0;
  double pnl = 0.0;
};

struct RebuildRecord {
  Date date;
  std::size_t edges = 0;
  int modeled_targets = 0;
  int nonconverged_fits = 0;
  std::vector<std::string> skipped;  // missing windows or no predictors
};

struct ModelSeries {
  std::string name;
  std::vector<std::vector<double>> daily;       // [quantile][day]
  std::vector<std::vector<double>> cumulative;  // prefix sums of daily
  std::vector<double> sharpe;                   // [quantile], NaN when undefined
  std::vector<std::vector<StockRecord>> records;  // [day], ranked by |prediction| desc, ticker asc
};

struct BacktestReport {
  std::vector<std::string> tickers;
  std::vector<Date> dates;  // prediction dates
  std::vector<double> quantile_fractions;
  std::vector<ModelSeries> models;
  std::vector<RebuildRecord> rebuilds;
  double runtime_seconds = 0.0;  // informational; never exported

  const ModelSeries& model(std::string_view name) const;
};

/// Defaults for the eight base methods, in ensemble order.
std::vector<ModelSpec> default_model_specs();

/// Inclusive rows of data.dates that receive predictions: the first row
/// after the warm-up plus one full window, clipped by start/end/span_days.
/// Throws SpanUnavailable.
struct PredictionSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};
PredictionSpan prediction_span(const BacktestData& data, const FeaturePlan& plan, const BacktestConfig& config);

/// Rolling train/predict/evaluate loop. Every retrain_every target days the
/// graph is rebuilt and every model refit on rows [t-w, t-1]; days until the
/// next rebuild are predicted with those fits. When specs are exactly the
/// eight base methods in order, ENS_AVG and ENS_MED are appended. Output is
/// independent of `workers`.
BacktestReport run_backtest(const BacktestData& data, const FeaturePlan& features, const std::vector<ModelSpec>& specs,
                            const BacktestConfig& config, std::uint64_t seed, int workers = 1);

/// sum sign(s) * r * b with sign(0) = 0.
double daily_pnl(std::span<const double> predictions, std::span<const double> realized,
                 std::span<const double> capital);

/// min(bps * mdv, cap).
double position_size(double mdv, double bps, double cap);

/// mean / sample sd * sqrt(252). Throws ZeroVolatility for a constant
/// series and EmptyInput for fewer than two values.
double sharpe_ratio(std::span<const double> pnl);

/// sharpe_ratio with NaN in place of the errors.
double sharpe_or_nan(std::span<const double> pnl);

/// ceil(f * n) per fraction.
std::vector<std::size_t> quantile_sizes(std::size_t n, std::span<const double> fractions);

/// Indices ordered by |prediction| descending, ties by ticker ascending.
std::vector<int> rank_by_magnitude(std::span<const double> predictions, std::span<const std::string> tickers);

/// Nested portfolios qr1 ... qrK as ticker lists.
std::vector<std::vector<std::string>> quantile_portfolios(std::span<const double> predictions,
                                                          std::span<const std::string> tickers,
                                                          std::span<const double> fractions);

/// Median across models of the SR at one quantile; undefined SRs count as 0.
double median_sharpe(const BacktestReport& report, std::size_t quantile);

}  // namespace xmkt

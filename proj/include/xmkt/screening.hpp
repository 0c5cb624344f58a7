#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmkt/calendar.hpp"
#include "xmkt/market_data.hpp"

namespace xmkt {

struct ScreenConfig {
  int window = 250;  // w, trading days
  int lag = 1;       // l, source trading days
  double tau = 2.0;  // keep edges with |t| > tau
  std::optional<int> max_predictors = 50;  // per-target in-degree cap
  std::optional<double> bh_fdr;            // optional Benjamini-Hochberg level, off by default
  bool allow_self_edges = true;            // relevant when source and target tickers overlap
  bool winsorize = true;                   // clip window returns before regression

  /// Throws InvalidConfig when w < 3, l < 0 or tau <= 0.
  void validate() const;
};

enum class PairStatus { Ok, ConstantPredictor, PerfectFit };

/// |t| assigned to a perfect linear fit (SSE <= 1e-14 * sum y^2), signed like beta.
inline constexpr double kPerfectFitT = 1e9;
inline constexpr double kPerfectFitRelSse = 1e-14;

/// Simple regression y = alpha + beta x.
struct PairStat {
  double beta = 0.0;
  double alpha = 0.0;
  double t_beta = 0.0;
  double sse = 0.0;
  double x_var_sum = 0.0;  // sum (x - xbar)^2
  PairStatus status = PairStatus::Ok;
};

/// Slope t-statistic t = beta / (s_e / sqrt(Sxx)), s_e = sqrt(SSE / (w - 2)).
/// SSE comes from an explicit residual pass. A constant x yields
/// ConstantPredictor (t = 0); a perfect fit yields PerfectFit with
/// t = +-kPerfectFitT. Throws DimensionMismatch on unequal or < 3 lengths.
PairStat pair_tstat(std::span<const double> x, std::span<const double> y);

struct Edge {
  int source = 0;
  int target = 0;
  double t_beta = 0.0;
  bool synthetic = false;  // inserted by randomize_edges
};

/// Directed source -> target graph. Biadjacency rows are targets and
/// columns are sources.
struct BipartiteGraph {
  std::vector<std::string> source_tickers;
  std::vector<std::string> target_tickers;
  std::vector<std::vector<Edge>> in_edges;  // per target, ascending source index
  std::vector<char> source_eligible;        // sources with a complete window
  Date as_of;
  ScreenConfig config;

  std::size_t edge_count() const;
  std::vector<int> in_degrees() const;
  Matrix biadjacency() const;
  std::vector<Edge> edges() const;  // ordered by (target, source)
};

struct ScreenDiagnostics {
  std::vector<std::string> skipped_sources;  // WindowUnavailable
  std::vector<std::string> skipped_targets;
  std::size_t constant_pairs = 0;
  std::size_t perfect_fit_pairs = 0;
};

/// Source returns re-indexed on the target calendar: row u holds the source
/// return paired with target date u at the configured lag (NaN if none).
struct AlignedSource {
  std::vector<std::string> tickers;
  Matrix values;
};

AlignedSource align_source(const ReturnPanel& source, Session source_session,
                           const std::vector<Date>& target_dates, Session target_session, int lag);

/// Screens every ordered (source, target) pair on the windows ending just
/// before target row `as_of_index`: targets use rows [t-w, t-1] of
/// `target`, sources the same rows of the aligned matrix (which already
/// carries the lag). Stocks with a missing value in their window are
/// skipped and reported. Output does not depend on `workers`.
BipartiteGraph build_graph(const AlignedSource& source, const std::vector<std::string>& target_tickers,
                           const Matrix& target, std::size_t as_of_index, Date as_of,
                           const ScreenConfig& config, int workers = 1,
                           ScreenDiagnostics* diagnostics = nullptr);

/// Convenience overload working from two return panels and their sessions.
BipartiteGraph build_graph(const ReturnPanel& source, Session source_session, const ReturnPanel& target,
                           Session target_session, const ScreenConfig& config, Date as_of, int workers = 1,
                           ScreenDiagnostics* diagnostics = nullptr);

/// 25th/50th/75th percentiles of the in-degree over all targets, zero
/// in-degree included (linear-interpolation convention).
std::array<double, 3> in_degree_percentiles(const BipartiteGraph& graph);

/// Elementwise mean of the biadjacency matrices; absent edges count as 0.
Matrix time_average_biadjacency(std::span<const BipartiteGraph> graphs);

struct SectorMatrix {
  std::vector<std::string> target_sectors;  // rows, ascending
  std::vector<std::string> source_sectors;  // columns, ascending
  Matrix values;
};

/// Median of |entry| within each (target-sector, source-sector) block of a
/// targets x sources matrix. Throws UnlabeledTicker for an empty label.
SectorMatrix sector_block_median_abs(const Matrix& matrix, const std::vector<std::string>& source_sectors,
                                     const std::vector<std::string>& target_sectors);

/// Replaces round-half-up(fraction * in-degree) uniformly chosen in-edges of
/// every target by edges from uniformly chosen previously unconnected
/// eligible sources. In-degrees are preserved; new edges keep the replaced
/// weight and are flagged synthetic.
BipartiteGraph randomize_edges(const BipartiteGraph& graph, double fraction, std::uint64_t seed);

}  // namespace xmkt

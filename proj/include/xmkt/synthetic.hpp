#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xmkt/calendar.hpp"
#include "xmkt/market_data.hpp"
#include "xmkt/screening.hpp"

namespace xmkt {

/// Two markets with planted, lagged predictive structure. The "source"
/// market trades in source_session, the "target" market in target_session.
///
/// Excess returns are built from components: each source stock has an
/// overnight gap and an intraday move, pvCLCL = gap + op. A target stock's
/// excess OPCL is
///   op_i(t) = m(t) * sum_j beta_ji * x_j(pair(t)) + sum_k gamma_ki * y_k(t-1) + N(0, noise_sigma)
/// where x_j is source excess pvCLCL, pair() is the cross-calendar pairing at
/// true_lag, y_k is target excess pvCLCL and m(t) = (1 - kappa) + kappa * |e(pair(t))| / E|e|
/// couples the slopes to the size of the source ETF move e. Its overnight gap
/// is independent noise. Raw returns add the market ETF's own components.
struct PlantedSpec {
  int n_source = 40;
  int n_target = 10;
  int n_dates = 1000;  // trading days per market
  double edge_density = 0.1;
  double beta_min = 0.3;
  double beta_max = 0.6;
  double noise_sigma = 0.02;   // target idiosyncratic OPCL volatility
  double source_sigma = 0.02;  // source excess pvCLCL volatility
  double gap_share = 0.5;      // variance share of the overnight gap in source pvCLCL
  double target_gap_sigma = 0.01;
  int true_lag = 1;
  int sector_count = 4;
  double shock_coupling = 0.0;  // kappa in [0, 1]
  double market_sigma = 0.01;   // ETF pvCLCL volatility
  double holiday_rate = 0.02;   // dropped weekdays per market, disjoint across markets
  double within_density = 0.0;  // planted target -> target lag-1 edges (off-diagonal)
  double within_beta = 0.3;
  double ar_coefficient = 0.0;  // own lag-1 pvCLCL -> OPCL
  std::string source_market = "US";
  std::string target_market = "CN";
  std::string source_prefix = "US";
  std::string target_prefix = "CN";
  std::string source_etf = "SPY";
  std::string target_etf = "513500.SH";
  Session source_session = kUsSession;
  Session target_session = kCnSession;
  Date start = Date(16436);  // 2015-01-01
  std::uint64_t seed = 0;

  /// Throws InvalidSpec.
  void validate() const;
};

struct PlantedEdge {
  std::string source;
  std::string target;
  double beta = 0.0;
  int lag = 0;
};

struct SyntheticMarkets {
  PricePanel source;
  PricePanel target;
  std::vector<PlantedEdge> edges;         // source market -> target market
  std::vector<PlantedEdge> within_edges;  // target market -> target market, lag 1 (self = AR term)
};

SyntheticMarkets generate(const PlantedSpec& spec);

/// CSV `source,target,beta,lag`.
void write_planted_edges(const std::vector<PlantedEdge>& edges, const std::filesystem::path& path);

struct Recovery {
  double precision = 0.0;  // NaN when nothing was found
  double recall = 0.0;     // NaN when nothing was planted
  std::size_t true_positives = 0;
  std::size_t found = 0;
  std::size_t planted = 0;
};

/// A found edge is a true positive when it is planted and its t-statistic
/// has the sign of the planted slope.
Recovery recovery_metrics(const BipartiteGraph& graph, const std::vector<PlantedEdge>& planted);

}  // namespace xmkt

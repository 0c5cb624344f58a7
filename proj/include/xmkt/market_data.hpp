#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmkt/calendar.hpp"

namespace xmkt {

/// Dates x tickers. Missing observations are quiet NaN, never zero.
using Matrix = Eigen::MatrixXd;

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct PricePanel {
  std::string market_id;
  std::vector<Date> dates;
  std::vector<std::string> tickers;  // sorted ascending
  Matrix open;
  Matrix close;
  Matrix volume;
  Matrix market_cap;
  std::vector<std::string> sector;  // one label per ticker, empty when unknown
  std::string etf_ticker;

  std::ptrdiff_t ticker_index(std::string_view ticker) const;
  TradingCalendar calendar(Session session) const { return {market_id, dates, session}; }

  /// Checks every structural invariant; throws the matching ErrorCode.
  void validate() const;

  friend bool operator==(const PricePanel&, const PricePanel&);
};

enum class ReturnKind { pvCLCL, OPCL };

std::string_view to_string(ReturnKind kind) noexcept;
ReturnKind parse_return_kind(std::string_view text);

/// Log returns, dates x tickers. A pvCLCL panel starts one date after its
/// source price panel.
struct ReturnPanel {
  std::string market_id;
  ReturnKind kind = ReturnKind::pvCLCL;
  bool excess = false;
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Matrix values;

  std::ptrdiff_t ticker_index(std::string_view ticker) const;
};

/// One return series (typically the market ETF).
struct ReturnSeries {
  ReturnKind kind = ReturnKind::pvCLCL;
  std::vector<Date> dates;
  std::vector<double> values;
};

struct RowDiagnostic {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  PricePanel panel;
  std::vector<RowDiagnostic> rejected_rows;
};

/// Reads one market file with header
/// `date,ticker,open,close,volume,market_cap,sector` (column order free,
/// `mcap` accepted as an alias). Empty fields are missing values. Rows whose
/// numerics do not parse are rejected and reported, not loaded.
LoadResult load_price_csv(const std::filesystem::path& path, std::string market_id,
                          std::string etf_ticker = {});

/// Writes the same contract; shortest round-trip float formatting.
void write_price_csv(const PricePanel& panel, const std::filesystem::path& path);

ReturnPanel compute_returns(const PricePanel& panel, ReturnKind kind);

/// Column `ticker` of a return panel as a series.
ReturnSeries column_series(const ReturnPanel& returns, std::string_view ticker);

/// value(t,i) = raw(t,i) - etf(t).
ReturnPanel to_excess(const ReturnPanel& raw, const ReturnSeries& etf);

/// compute_returns followed by to_excess against the panel's own ETF.
ReturnPanel excess_returns(const PricePanel& panel, ReturnKind kind);

/// Price panel restricted to `tickers` (kept in ascending order) plus the ETF.
/// Throws UnknownTicker.
PricePanel subset_panel(const PricePanel& panel, const std::vector<std::string>& tickers);

/// Keeps the listed columns in the given order; throws UnknownTicker.
ReturnPanel select_tickers(const ReturnPanel& returns, const std::vector<std::string>& tickers);

/// All tickers except `ticker` (e.g. the market ETF), order preserved.
ReturnPanel drop_ticker(const ReturnPanel& returns, std::string_view ticker);

/// Rows re-indexed onto `dates` (same market calendar); dates absent from
/// the panel become missing rows.
Matrix reindex_rows(const ReturnPanel& returns, const std::vector<Date>& dates);

inline constexpr double kWinsorLowerPct = 0.5;
inline constexpr double kWinsorUpperPct = 99.5;

/// Clips values below/above the given percentiles (linear-interpolation
/// convention, see stats::percentile) to those percentile values.
std::vector<double> winsorize_window(std::span<const double> values,
                                     double lower_pct = kWinsorLowerPct,
                                     double upper_pct = kWinsorUpperPct);

/// In-place variant used on hot paths; `scratch` is reused between calls.
void winsorize_in_place(std::span<double> values, std::vector<double>& scratch,
                        double lower_pct = kWinsorLowerPct, double upper_pct = kWinsorUpperPct);

enum class UniverseMode { FullSample, Trailing };

struct UniverseOptions {
  UniverseMode mode = UniverseMode::FullSample;
  std::optional<Date> as_of;  // Trailing: average over `window` dates strictly before as_of
  int window = 250;
};

/// Top-n non-ETF tickers by mean market cap (missing values ignored), ties
/// broken by ticker ascending.
std::vector<std::string> select_universe(const PricePanel& panel, std::size_t n,
                                         const UniverseOptions& options = {});

inline constexpr int kMdvWindow = 21;

/// Median of volume*close over the 21 trading dates strictly before
/// `date_index`. Throws InsufficientHistory if any of them is missing.
double mdv21(const PricePanel& panel, std::size_t ticker_index, std::size_t date_index);
double mdv21(const PricePanel& panel, std::string_view ticker, Date date);

}  // namespace xmkt

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xmkt/backtest.hpp"
#include "xmkt/experiments.hpp"
#include "xmkt/screening.hpp"

namespace xmkt {

/// Shortest round-trip decimal; empty for NaN.
std::string format_number(double v);

/// Parses a field written by format_number (empty -> NaN). Throws UnparseableValue.
double parse_number(std::string_view field);

/// Minimal CSV table: no quoting, comma separated.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws MissingColumn
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

/// `qr1`..`qrK`.
std::string quantile_label(std::size_t q);

/// Rows `model,quantile,sr,total_pnl,n_days`, models in report order.
CsvTable summary_table(const BacktestReport& report);

/// `date,daily_pnl,cum_pnl` for one model and quantile.
CsvTable pnl_table(const BacktestReport& report, std::size_t model, std::size_t quantile);

/// summary.csv, pnl/<model>_<qr>.csv and rebuilds.csv under `dir`.
void write_backtest_report(const BacktestReport& report, const std::filesystem::path& dir);

/// `as_of,source,target,t_beta,synthetic_flag` for every graph in order.
CsvTable graph_table(std::span<const BipartiteGraph> graphs);

/// Dense matrix with a header row of column labels and a leading label column.
CsvTable matrix_table(const Matrix& m, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& corner = "");

CsvTable sector_matrix_table(const SectorMatrix& m);

/// `as_of,edges,p25,p50,p75`.
CsvTable in_degree_table(std::span<const BipartiteGraph> graphs);

/// `<parameter>,seed,quantile,median_sr` plus rows with seed `mean`.
CsvTable sweep_table(const SweepTable& t);

/// `method,cell,<hyperparameters>,quantile,sr,error` and `method,mean|sd` rows.
CsvTable grid_table(const GridTable& t, const std::vector<double>& quantile_fractions);

/// `model,shock_quantile,fraction,n_days,sr`; median rows use model `median`.
CsvTable shock_table(const ShockTable& t);

/// `model,sector,quantile,sr,total_pnl`.
CsvTable sector_table(const SectorTable& t, const std::vector<double>& quantile_fractions);

/// Model x quantile SR matrix from a summary table (plot-ready heatmap).
CsvTable sharpe_heatmap(const CsvTable& summary);

}  // namespace xmkt

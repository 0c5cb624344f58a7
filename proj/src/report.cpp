#include "xmkt/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "xmkt/error.hpp"

namespace xmkt {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string tuned_parameters(const ModelSpec& s) {
  const auto& hp = s.hp;
  auto kv = [](const char* k, double v) { return std::string(k) + "=" + format_number(v); };
  switch (s.method) {
    case Method::LASSO:
    case Method::RIDGE: return kv("lambda", hp.lambda);
    case Method::SVR: return kv("C", hp.C);
    case Method::XGB:
    case Method::ADABOOST:
      return kv("max_depth", hp.max_depth) + ";" + kv("learning_rate", hp.learning_rate) + ";" +
             kv("n_estimators", hp.n_estimators);
    case Method::HGBT:
      return kv("num_leaves", hp.num_leaves) + ";" + kv("learning_rate", hp.learning_rate) + ";" +
             kv("n_estimators", hp.n_estimators);
    case Method::RF: return kv("n_estimators", hp.n_estimators) + ";" + kv("max_depth", hp.max_depth);
    default: return {};
  }
}

double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_number(std::string_view field) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || p != field.data() + field.size())
    throw Error(ErrorCode::UnparseableValue, "not a number: '" + std::string(field) + "'");
  return v;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorCode::MissingColumn, "missing column " + std::string(name));
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open", path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyInput, "empty csv", path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size())
      throw Error(ErrorCode::MissingColumn, "row has the wrong number of fields",
                  path.string() + ":" + std::to_string(n));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write", path.string());
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  if (!out) throw Error(ErrorCode::IoError, "write failed", path.string());
}

std::string quantile_label(std::size_t q) { return "qr" + std::to_string(q + 1); }

CsvTable summary_table(const BacktestReport& report) {
  CsvTable t{{"model", "quantile", "sr", "total_pnl", "n_days"}, {}};
  for (const auto& m : report.models)
    for (std::size_t q = 0; q < report.quantile_fractions.size(); ++q)
      t.rows.push_back({m.name, quantile_label(q), format_number(m.sharpe[q]),
                        format_number(m.cumulative[q].empty() ? 0.0 : m.cumulative[q].back()),
                        std::to_string(m.daily[q].size())});
  return t;
}

CsvTable pnl_table(const BacktestReport& report, std::size_t model, std::size_t quantile) {
  const auto& m = report.models.at(model);
  CsvTable t{{"date", "daily_pnl", "cum_pnl"}, {}};
  for (std::size_t d = 0; d < report.dates.size(); ++d)
    t.rows.push_back({report.dates[d].iso(), format_number(m.daily[quantile][d]),
                      format_number(m.cumulative[quantile][d])});
  return t;
}

void write_backtest_report(const BacktestReport& report, const std::filesystem::path& dir) {
  write_csv(summary_table(report), dir / "summary.csv");
  for (std::size_t m = 0; m < report.models.size(); ++m)
    for (std::size_t q = 0; q < report.quantile_fractions.size(); ++q)
      write_csv(pnl_table(report, m, q), dir / "pnl" / (report.models[m].name + "_" + quantile_label(q) + ".csv"));
  CsvTable r{{"date", "edges", "modeled_targets", "nonconverged_fits", "skipped"}, {}};
  for (const auto& b : report.rebuilds) {
    std::string skipped;
    for (const auto& s : b.skipped) skipped += (skipped.empty() ? "" : ";") + s;
    r.rows.push_back({b.date.iso(), std::to_string(b.edges), std::to_string(b.modeled_targets),
                      std::to_string(b.nonconverged_fits), skipped});
  }
  write_csv(r, dir / "rebuilds.csv");
}

CsvTable graph_table(std::span<const BipartiteGraph> graphs) {
  CsvTable t{{"as_of", "source", "target", "t_beta", "synthetic_flag"}, {}};
  for (const auto& g : graphs)
    for (const auto& e : g.edges())
      t.rows.push_back({g.as_of.iso(), g.source_tickers[static_cast<std::size_t>(e.source)],
                        g.target_tickers[static_cast<std::size_t>(e.target)], format_number(e.t_beta),
                        e.synthetic ? "1" : "0"});
  return t;
}

CsvTable matrix_table(const Matrix& m, const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels, const std::string& corner) {
  if (static_cast<std::size_t>(m.rows()) != row_labels.size() ||
      static_cast<std::size_t>(m.cols()) != col_labels.size())
    throw Error(ErrorCode::DimensionMismatch, "labels do not match the matrix shape");
  CsvTable t;
  t.header.push_back(corner);
  t.header.insert(t.header.end(), col_labels.begin(), col_labels.end());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row{row_labels[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_number(m(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable sector_matrix_table(const SectorMatrix& m) {
  return matrix_table(m.values, m.target_sectors, m.source_sectors, "target_sector");
}

CsvTable in_degree_table(std::span<const BipartiteGraph> graphs) {
  CsvTable t{{"as_of", "edges", "p25", "p50", "p75"}, {}};
  for (const auto& g : graphs) {
    const auto p = in_degree_percentiles(g);
    t.rows.push_back({g.as_of.iso(), std::to_string(g.edge_count()), format_number(p[0]), format_number(p[1]),
                      format_number(p[2])});
  }
  return t;
}

CsvTable sweep_table(const SweepTable& s) {
  CsvTable t{{s.parameter, "seed", "quantile", "median_sr"}, {}};
  for (std::size_t v = 0; v < s.values.size(); ++v) {
    for (std::size_t k = 0; k < s.seeds.size(); ++k)
      for (std::size_t q = 0; q < s.median_sr[v][k].size(); ++q)
        t.rows.push_back({format_number(s.values[v]), std::to_string(s.seeds[k]), quantile_label(q),
                          format_number(s.median_sr[v][k][q])});
    for (std::size_t q = 0; q < s.mean_median_sr[v].size(); ++q)
      t.rows.push_back({format_number(s.values[v]), "mean", quantile_label(q), format_number(s.mean_median_sr[v][q])});
  }
  return t;
}

CsvTable grid_table(const GridTable& g, const std::vector<double>& quantile_fractions) {
  CsvTable t{{"method", "cell", "parameters", "quantile", "sr", "error"}, {}};
  for (std::size_t m = 0; m < g.methods.size(); ++m) {
    const std::string name(to_string(g.methods[m]));
    for (std::size_t c = 0; c < g.cells[m].size(); ++c) {
      const auto& cell = g.cells[m][c];
      for (std::size_t q = 0; q < quantile_fractions.size(); ++q)
        t.rows.push_back({name, std::to_string(c), tuned_parameters(cell.spec), quantile_label(q),
                          format_number(cell.sharpe[q]), cell.error});
    }
    for (std::size_t q = 0; q < quantile_fractions.size(); ++q) {
      t.rows.push_back({name, "mean", "", quantile_label(q), format_number(g.mean[m][q]), ""});
      t.rows.push_back({name, "sd", "", quantile_label(q), format_number(g.sd[m][q]), ""});
    }
  }
  return t;
}

CsvTable shock_table(const ShockTable& s) {
  CsvTable t{{"model", "shock_quantile", "fraction", "n_days", "sr"}, {}};
  auto emit = [&](const std::string& model, const std::vector<double>& srs) {
    for (std::size_t k = 0; k < s.fractions.size(); ++k)
      t.rows.push_back({model, quantile_label(k), format_number(s.fractions[k]), std::to_string(s.subset_days[k]),
                        format_number(srs[k])});
  };
  for (std::size_t m = 0; m < s.models.size(); ++m) emit(s.models[m], s.sharpe[m]);
  emit("median", s.median);
  return t;
}

CsvTable sector_table(const SectorTable& s, const std::vector<double>& quantile_fractions) {
  CsvTable t{{"model", "sector", "quantile", "sr", "total_pnl"}, {}};
  for (std::size_t m = 0; m < s.models.size(); ++m)
    for (std::size_t k = 0; k < s.sectors.size(); ++k)
      for (std::size_t q = 0; q < quantile_fractions.size(); ++q)
        t.rows.push_back({s.models[m], s.sectors[k], quantile_label(q), format_number(s.sharpe[m][k][q]),
                          format_number(sum(s.daily[m][k][q]))});
  return t;
}

CsvTable sharpe_heatmap(const CsvTable& summary) {
  const auto cm = summary.column("model"), cq = summary.column("quantile"), cs = summary.column("sr");
  std::vector<std::string> models, quantiles;
  auto index = [](std::vector<std::string>& v, const std::string& s) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == s) return i;
    v.push_back(s);
    return v.size() - 1;
  };
  for (const auto& r : summary.rows) {
    index(models, r[cm]);
    index(quantiles, r[cq]);
  }
  Matrix m = Matrix::Constant(static_cast<Eigen::Index>(models.size()), static_cast<Eigen::Index>(quantiles.size()),
                              std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : summary.rows)
    m(static_cast<Eigen::Index>(index(models, r[cm])), static_cast<Eigen::Index>(index(quantiles, r[cq]))) =
        parse_number(r[cs]);
  return matrix_table(m, models, quantiles, "model");
}

}  // namespace xmkt

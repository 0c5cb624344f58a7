#include "xmkt/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "xmkt/error.hpp"
#include "xmkt/stats.hpp"

namespace xmkt {
namespace {

bool same_with_nan(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i];
    const double y = b.data()[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Empty field -> missing. Returns false when the text is not a number.
bool parse_number(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) {
    out = kMissing;
    return true;
  }
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && p == text.data() + text.size() && std::isfinite(out);
}

void append_number(std::string& line, double v) {
  if (std::isnan(v)) return;
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, p);
}

void check_same_shape(const PricePanel& p, const Matrix& m, const char* name) {
  if (m.rows() != static_cast<Eigen::Index>(p.dates.size()) ||
      m.cols() != static_cast<Eigen::Index>(p.tickers.size())) {
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " matrix does not match dates x tickers",
                p.market_id);
  }
}

}  // namespace

std::string_view to_string(ReturnKind kind) noexcept {
  return kind == ReturnKind::pvCLCL ? "pvCLCL" : "OPCL";
}

ReturnKind parse_return_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "pvclcl") return ReturnKind::pvCLCL;
  if (lower == "opcl") return ReturnKind::OPCL;
  throw Error(ErrorCode::InvalidConfig, "unknown return kind '" + std::string(text) + "'");
}

std::ptrdiff_t PricePanel::ticker_index(std::string_view ticker) const {
  auto it = std::lower_bound(tickers.begin(), tickers.end(), ticker);
  if (it == tickers.end() || *it != ticker) return -1;
  return it - tickers.begin();
}

std::ptrdiff_t ReturnPanel::ticker_index(std::string_view ticker) const {
  auto it = std::find(tickers.begin(), tickers.end(), ticker);
  return it == tickers.end() ? -1 : it - tickers.begin();
}

void PricePanel::validate() const {
  for (std::size_t t = 1; t < dates.size(); ++t) {
    if (!(dates[t - 1] < dates[t])) {
      throw Error(ErrorCode::NonMonotoneDates, "dates not strictly increasing", dates[t].iso());
    }
  }
  check_same_shape(*this, open, "open");
  check_same_shape(*this, close, "close");
  check_same_shape(*this, volume, "volume");
  check_same_shape(*this, market_cap, "market_cap");
  if (sector.size() != tickers.size()) {
    throw Error(ErrorCode::DimensionMismatch, "sector labels do not match tickers", market_id);
  }
  for (Eigen::Index t = 0; t < close.rows(); ++t) {
    for (Eigen::Index j = 0; j < close.cols(); ++j) {
      for (const Matrix* m : {&open, &close}) {
        const double v = (*m)(t, j);
        if (!std::isnan(v) && !(v > 0.0)) {
          throw Error(ErrorCode::NegativePrice, "non-positive price",
                      tickers[static_cast<std::size_t>(j)] + "@" + dates[static_cast<std::size_t>(t)].iso());
        }
      }
    }
  }
  if (!etf_ticker.empty()) {
    const auto e = ticker_index(etf_ticker);
    if (e < 0) throw Error(ErrorCode::UnknownTicker, "ETF ticker not in panel", etf_ticker);
    for (Eigen::Index t = 0; t < close.rows(); ++t) {
      if (std::isnan(open(t, e)) || std::isnan(close(t, e))) {
        throw Error(ErrorCode::IncompleteEtf, "ETF price series has a missing value",
                    etf_ticker + "@" + dates[static_cast<std::size_t>(t)].iso());
      }
    }
  }
}

bool operator==(const PricePanel& a, const PricePanel& b) {
  return a.market_id == b.market_id && a.dates == b.dates && a.tickers == b.tickers &&
         a.sector == b.sector && a.etf_ticker == b.etf_ticker && same_with_nan(a.open, b.open) &&
         same_with_nan(a.close, b.close) && same_with_nan(a.volume, b.volume) &&
         same_with_nan(a.market_cap, b.market_cap);
}

LoadResult load_price_csv(const std::filesystem::path& path, std::string market_id,
                          std::string etf_ticker) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open price file", path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingColumn, "empty file, no header", path.string());
  const auto header = split_csv_line(line);
  auto column = [&](std::initializer_list<std::string_view> names) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      for (auto n : names) {
        if (trim(header[i]) == n) return i;
      }
    }
    throw Error(ErrorCode::MissingColumn, "missing column '" + std::string(*names.begin()) + "'",
                path.string() + ":1");
  };
  const std::size_t c_date = column({"date"});
  const std::size_t c_ticker = column({"ticker"});
  const std::size_t c_open = column({"open"});
  const std::size_t c_close = column({"close"});
  const std::size_t c_volume = column({"volume"});
  const std::size_t c_mcap = column({"market_cap", "mcap"});
  const std::size_t c_sector = column({"sector"});
  const std::size_t needed = std::max({c_date, c_ticker, c_open, c_close, c_volume, c_mcap, c_sector}) + 1;

  struct Row {
    std::size_t date;
    std::string ticker;
    double open, close, volume, mcap;
    std::string sector;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::vector<Date> dates;
  LoadResult result;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (f.size() < needed) {
      result.rejected_rows.push_back({lineno, "expected " + std::to_string(needed) + " fields"});
      continue;
    }
    Date d;
    try {
      d = Date::parse(trim(f[c_date]));
    } catch (const Error& e) {
      result.rejected_rows.push_back({lineno, e.what()});
      continue;
    }
    if (!dates.empty() && d < dates.back()) {
      throw Error(ErrorCode::NonMonotoneDates, "date " + d.iso() + " precedes " + dates.back().iso(), where);
    }
    if (dates.empty() || dates.back() != d) dates.push_back(d);
    Row r{dates.size() - 1, std::string(trim(f[c_ticker])), 0, 0, 0, 0, std::string(trim(f[c_sector])), lineno};
    if (r.ticker.empty()) {
      result.rejected_rows.push_back({lineno, "empty ticker"});
      continue;
    }
    if (!parse_number(f[c_open], r.open) || !parse_number(f[c_close], r.close) ||
        !parse_number(f[c_volume], r.volume) || !parse_number(f[c_mcap], r.mcap)) {
      result.rejected_rows.push_back({lineno, "unparseable numeric field"});
      continue;
    }
    for (double price : {r.open, r.close}) {
      if (!std::isnan(price) && price <= 0.0) {
        throw Error(ErrorCode::NegativePrice, "non-positive price for " + r.ticker + " on " + d.iso(), where);
      }
    }
    for (double q : {r.volume, r.mcap}) {
      if (!std::isnan(q) && q < 0.0) {
        throw Error(ErrorCode::NegativePrice, "negative volume or market cap for " + r.ticker, where);
      }
    }
    rows.push_back(std::move(r));
  }

  PricePanel& p = result.panel;
  p.market_id = std::move(market_id);
  p.etf_ticker = std::move(etf_ticker);
  p.dates = std::move(dates);
  for (const auto& r : rows) p.tickers.push_back(r.ticker);
  std::sort(p.tickers.begin(), p.tickers.end());
  p.tickers.erase(std::unique(p.tickers.begin(), p.tickers.end()), p.tickers.end());
  const auto nd = static_cast<Eigen::Index>(p.dates.size());
  const auto nt = static_cast<Eigen::Index>(p.tickers.size());
  for (Matrix* m : {&p.open, &p.close, &p.volume, &p.market_cap}) m->setConstant(nd, nt, kMissing);
  p.sector.assign(p.tickers.size(), {});
  std::vector<char> seen(static_cast<std::size_t>(nd * nt), 0);
  for (const auto& r : rows) {
    const auto j = p.ticker_index(r.ticker);
    const auto t = static_cast<Eigen::Index>(r.date);
    char& s = seen[static_cast<std::size_t>(t * nt + j)];
    if (s) {
      throw Error(ErrorCode::DuplicateTickerDate,
                  "duplicate row for " + r.ticker + " on " + p.dates[r.date].iso(),
                  path.string() + ":" + std::to_string(r.line));
    }
    s = 1;
    p.open(t, j) = r.open;
    p.close(t, j) = r.close;
    p.volume(t, j) = r.volume;
    p.market_cap(t, j) = r.mcap;
    auto& label = p.sector[static_cast<std::size_t>(j)];
    if (label.empty()) {
      label = r.sector;
    } else if (!r.sector.empty() && r.sector != label) {
      result.rejected_rows.push_back({r.line, "sector '" + r.sector + "' conflicts with '" + label +
                                                  "' for " + r.ticker + "; first label kept"});
    }
  }
  p.validate();
  return result;
}

void write_price_csv(const PricePanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write price file", path.string());
  out << "date,ticker,open,close,volume,market_cap,sector\n";
  std::string line;
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    const std::string date = panel.dates[t].iso();
    const auto ti = static_cast<Eigen::Index>(t);
    for (std::size_t j = 0; j < panel.tickers.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double vals[] = {panel.open(ti, jj), panel.close(ti, jj), panel.volume(ti, jj),
                             panel.market_cap(ti, jj)};
      if (std::all_of(std::begin(vals), std::end(vals), [](double v) { return std::isnan(v); })) continue;
      line.clear();
      line += date;
      line += ',';
      line += panel.tickers[j];
      for (double v : vals) {
        line += ',';
        append_number(line, v);
      }
      line += ',';
      line += panel.sector[j];
      line += '\n';
      out << line;
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed", path.string());
}

ReturnPanel compute_returns(const PricePanel& panel, ReturnKind kind) {
  ReturnPanel r;
  r.market_id = panel.market_id;
  r.kind = kind;
  r.tickers = panel.tickers;
  const auto nt = static_cast<Eigen::Index>(panel.tickers.size());
  if (kind == ReturnKind::pvCLCL) {
    if (panel.dates.size() < 2) {
      throw Error(ErrorCode::InsufficientDates, "pvCLCL returns need at least two dates", panel.market_id);
    }
    const auto nd = static_cast<Eigen::Index>(panel.dates.size()) - 1;
    r.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    r.values.resize(nd, nt);
    for (Eigen::Index j = 0; j < nt; ++j) {
      for (Eigen::Index t = 0; t < nd; ++t) {
        r.values(t, j) = std::log(panel.close(t + 1, j) / panel.close(t, j));
      }
    }
  } else {
    if (panel.dates.empty()) throw Error(ErrorCode::InsufficientDates, "empty panel", panel.market_id);
    r.dates = panel.dates;
    r.values = (panel.close.array() / panel.open.array()).log().matrix();
  }
  return r;  // NaN inputs propagate to NaN returns
}

ReturnSeries column_series(const ReturnPanel& returns, std::string_view ticker) {
  const auto j = returns.ticker_index(ticker);
  if (j < 0) throw Error(ErrorCode::UnknownTicker, "ticker not in return panel", std::string(ticker));
  ReturnSeries s{returns.kind, returns.dates, {}};
  s.values.resize(returns.dates.size());
  for (std::size_t t = 0; t < s.values.size(); ++t) s.values[t] = returns.values(static_cast<Eigen::Index>(t), j);
  return s;
}

ReturnPanel to_excess(const ReturnPanel& raw, const ReturnSeries& etf) {
  if (raw.kind != etf.kind) {
    throw Error(ErrorCode::KindMismatch, std::string("returns are ") + std::string(to_string(raw.kind)) +
                                             " but ETF series is " + std::string(to_string(etf.kind)));
  }
  if (raw.dates != etf.dates || etf.values.size() != etf.dates.size()) {
    throw Error(ErrorCode::DateMismatch, "ETF series dates differ from the return panel", raw.market_id);
  }
  ReturnPanel out = raw;
  out.excess = true;
  for (Eigen::Index t = 0; t < out.values.rows(); ++t) {
    out.values.row(t).array() -= etf.values[static_cast<std::size_t>(t)];
  }
  return out;
}

ReturnPanel excess_returns(const PricePanel& panel, ReturnKind kind) {
  if (panel.etf_ticker.empty()) throw Error(ErrorCode::InvalidConfig, "panel has no ETF ticker", panel.market_id);
  ReturnPanel raw = compute_returns(panel, kind);
  return to_excess(raw, column_series(raw, panel.etf_ticker));
}

PricePanel subset_panel(const PricePanel& panel, const std::vector<std::string>& tickers) {
  std::vector<std::string> keep = tickers;
  if (!panel.etf_ticker.empty()) keep.push_back(panel.etf_ticker);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  PricePanel out;
  out.market_id = panel.market_id;
  out.dates = panel.dates;
  out.tickers = keep;
  out.etf_ticker = panel.etf_ticker;
  const auto rows = static_cast<Eigen::Index>(panel.dates.size());
  const auto cols = static_cast<Eigen::Index>(keep.size());
  out.open.resize(rows, cols);
  out.close.resize(rows, cols);
  out.volume.resize(rows, cols);
  out.market_cap.resize(rows, cols);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto j = panel.ticker_index(keep[k]);
    if (j < 0) throw Error(ErrorCode::UnknownTicker, "unknown ticker " + keep[k], panel.market_id);
    const auto c = static_cast<Eigen::Index>(k);
    out.open.col(c) = panel.open.col(j);
    out.close.col(c) = panel.close.col(j);
    out.volume.col(c) = panel.volume.col(j);
    out.market_cap.col(c) = panel.market_cap.col(j);
    out.sector.push_back(panel.sector[static_cast<std::size_t>(j)]);
  }
  return out;
}

ReturnPanel select_tickers(const ReturnPanel& returns, const std::vector<std::string>& tickers) {
  ReturnPanel out;
  out.market_id = returns.market_id;
  out.kind = returns.kind;
  out.excess = returns.excess;
  out.dates = returns.dates;
  out.tickers = tickers;
  out.values.resize(returns.values.rows(), static_cast<Eigen::Index>(tickers.size()));
  for (std::size_t k = 0; k < tickers.size(); ++k) {
    const auto j = returns.ticker_index(tickers[k]);
    if (j < 0) throw Error(ErrorCode::UnknownTicker, "unknown ticker " + tickers[k], returns.market_id);
    out.values.col(static_cast<Eigen::Index>(k)) = returns.values.col(j);
  }
  return out;
}

ReturnPanel drop_ticker(const ReturnPanel& returns, std::string_view ticker) {
  std::vector<std::string> keep;
  for (const auto& t : returns.tickers)
    if (t != ticker) keep.push_back(t);
  return select_tickers(returns, keep);
}

Matrix reindex_rows(const ReturnPanel& returns, const std::vector<Date>& dates) {
  Matrix out = Matrix::Constant(static_cast<Eigen::Index>(dates.size()), returns.values.cols(), kMissing);
  std::size_t k = 0;
  for (std::size_t u = 0; u < dates.size(); ++u) {
    while (k < returns.dates.size() && returns.dates[k] < dates[u]) ++k;
    if (k < returns.dates.size() && returns.dates[k] == dates[u])
      out.row(static_cast<Eigen::Index>(u)) = returns.values.row(static_cast<Eigen::Index>(k));
  }
  return out;
}

void winsorize_in_place(std::span<double> values, std::vector<double>& scratch, double lower_pct,
                        double upper_pct) {
  if (values.size() < 2) throw Error(ErrorCode::EmptyInput, "winsorization needs at least two values");
  if (!(lower_pct > 0.0 && upper_pct < 100.0 && lower_pct < upper_pct)) {
    throw Error(ErrorCode::InvalidConfig, "winsorization percentiles must satisfy 0 < lower < upper < 100");
  }
  scratch.assign(values.begin(), values.end());
  std::sort(scratch.begin(), scratch.end());
  const double lo = stats::percentile_sorted(scratch, lower_pct);
  const double hi = stats::percentile_sorted(scratch, upper_pct);
  for (double& v : values) v = std::clamp(v, lo, hi);
}

std::vector<double> winsorize_window(std::span<const double> values, double lower_pct, double upper_pct) {
  std::vector<double> out(values.begin(), values.end());
  std::vector<double> scratch;
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "winsorization of empty input");
  winsorize_in_place(out, scratch, lower_pct, upper_pct);
  return out;
}

std::vector<std::string> select_universe(const PricePanel& panel, std::size_t n,
                                         const UniverseOptions& options) {
  Eigen::Index first = 0;
  Eigen::Index last = static_cast<Eigen::Index>(panel.dates.size());
  if (options.mode == UniverseMode::Trailing) {
    if (!options.as_of) throw Error(ErrorCode::InvalidConfig, "trailing universe needs an as-of date");
    last = std::lower_bound(panel.dates.begin(), panel.dates.end(), *options.as_of) - panel.dates.begin();
    first = std::max<Eigen::Index>(0, last - options.window);
  }
  std::vector<std::pair<double, std::string>> ranked;
  for (std::size_t j = 0; j < panel.tickers.size(); ++j) {
    if (panel.tickers[j] == panel.etf_ticker) continue;
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index t = first; t < last; ++t) {
      const double v = panel.market_cap(t, static_cast<Eigen::Index>(j));
      if (!std::isnan(v)) {
        sum += v;
        ++count;
      }
    }
    ranked.emplace_back(count ? sum / static_cast<double>(count) : -1.0, panel.tickers[j]);
  }
  if (n > ranked.size()) {
    throw Error(ErrorCode::NTooLarge, "requested " + std::to_string(n) + " tickers but only " +
                                          std::to_string(ranked.size()) + " are available");
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].second);
  return out;
}

double mdv21(const PricePanel& panel, std::size_t ticker_index, std::size_t date_index) {
  if (date_index < static_cast<std::size_t>(kMdvWindow) || date_index > panel.dates.size()) {
    throw Error(ErrorCode::InsufficientHistory, "fewer than 21 trading dates before the evaluation date",
                panel.tickers.at(ticker_index));
  }
  double dv[kMdvWindow];
  const auto j = static_cast<Eigen::Index>(ticker_index);
  for (int k = 0; k < kMdvWindow; ++k) {
    const auto t = static_cast<Eigen::Index>(date_index) - kMdvWindow + k;
    dv[k] = panel.volume(t, j) * panel.close(t, j);
    if (std::isnan(dv[k])) {
      throw Error(ErrorCode::InsufficientHistory, "missing volume or close inside the 21-day window",
                  panel.tickers[ticker_index] + "@" + panel.dates[static_cast<std::size_t>(t)].iso());
    }
  }
  return stats::median(dv);
}

double mdv21(const PricePanel& panel, std::string_view ticker, Date date) {
  const auto j = panel.ticker_index(ticker);
  if (j < 0) throw Error(ErrorCode::UnknownTicker, "unknown ticker", std::string(ticker));
  const auto it = std::lower_bound(panel.dates.begin(), panel.dates.end(), date);
  return mdv21(panel, static_cast<std::size_t>(j), static_cast<std::size_t>(it - panel.dates.begin()));
}

}  // namespace xmkt

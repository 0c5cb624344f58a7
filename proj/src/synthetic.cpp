#include "xmkt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "xmkt/error.hpp"
#include "xmkt/rng.hpp"

namespace xmkt {

namespace {

std::string ticker_name(const std::string& prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", i + 1);
  return prefix + buf;
}

std::vector<Date> weekdays(Date start, int count) {
  std::vector<Date> out;
  out.reserve(count);
  for (Date d = start; static_cast<int>(out.size()) < count; d = Date(d.days() + 1))
    if (d.is_weekday()) out.push_back(d);
  return out;
}

struct Components {
  Matrix gap;  // dates x tickers, excess
  Matrix op;
};

// Builds a price panel from excess components plus ETF components. The ETF
// is the first ticker in `names` order handled by the caller via etf_index.
PricePanel assemble(const std::string& market, const std::vector<Date>& dates, const std::vector<std::string>& names,
                    int etf_index, const Components& c, const std::vector<std::string>& sectors, rng::Engine& eng) {
  const Eigen::Index T = static_cast<Eigen::Index>(dates.size());
  const Eigen::Index n = static_cast<Eigen::Index>(names.size());
  PricePanel p;
  p.market_id = market;
  p.dates = dates;
  p.etf_ticker = names[etf_index];
  p.open.resize(T, n);
  p.close.resize(T, n);
  p.volume.resize(T, n);
  p.market_cap.resize(T, n);

  std::normal_distribution<double> N01(0.0, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    const bool etf = j == etf_index;
    const double shares = std::exp(std::log(etf ? 5e8 : 1e8) + 0.5 * N01(eng));
    const double turnover_mu = std::log(0.005);
    double close_prev = 100.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      double gap = c.gap(t, etf_index), op = c.op(t, etf_index);
      if (!etf) gap += c.gap(t, j), op += c.op(t, j);
      const double open = t == 0 ? 100.0 * std::exp(-op) : close_prev * std::exp(gap);
      const double close = t == 0 ? 100.0 : open * std::exp(op);
      p.open(t, j) = open;
      p.close(t, j) = close;
      p.volume(t, j) = std::round(shares * std::exp(turnover_mu + 0.3 * N01(eng)));
      p.market_cap(t, j) = shares * close;
      close_prev = close;
    }
  }
  // tickers sorted ascending; permute columns accordingly
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return names[a] < names[b]; });
  auto permute = [&](Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (int k = 0; k < n; ++k) out.col(k) = m.col(order[k]);
    m = std::move(out);
  };
  permute(p.open);
  permute(p.close);
  permute(p.volume);
  permute(p.market_cap);
  for (int k = 0; k < n; ++k) {
    p.tickers.push_back(names[order[k]]);
    p.sector.push_back(sectors[order[k]]);
  }
  return p;
}

}  // namespace

void PlantedSpec::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidSpec, m); };
  if (n_source < 1 || n_target < 1) fail("n_source and n_target must be positive");
  if (n_dates < 3) fail("n_dates must be at least 3");
  if (!(edge_density >= 0 && edge_density <= 1)) fail("edge_density must lie in [0, 1]");
  if (!(within_density >= 0 && within_density <= 1)) fail("within_density must lie in [0, 1]");
  if (!(noise_sigma > 0)) fail("noise_sigma must be positive");
  if (!(source_sigma > 0) || !(market_sigma >= 0) || !(target_gap_sigma >= 0)) fail("volatilities must be positive");
  if (!(gap_share >= 0 && gap_share <= 1)) fail("gap_share must lie in [0, 1]");
  if (true_lag < minimum_lag(source_session, target_session)) fail("true_lag below the minimum admissible lag");
  if (!(beta_min <= beta_max)) fail("beta_min exceeds beta_max");
  if (!(shock_coupling >= 0 && shock_coupling <= 1)) fail("shock_coupling must lie in [0, 1]");
  if (!(holiday_rate >= 0 && holiday_rate < 0.25)) fail("holiday_rate must lie in [0, 0.25)");
  if (sector_count < 1) fail("sector_count must be positive");
}

SyntheticMarkets generate(const PlantedSpec& spec) {
  spec.validate();
  const int ns = spec.n_source, nt = spec.n_target;

  // calendars: a shared weekday base with disjoint dropped dates
  const int n_drop = static_cast<int>(std::lround(spec.holiday_rate * spec.n_dates));
  const auto base = weekdays(spec.start, spec.n_dates + n_drop);
  std::vector<char> drop(base.size(), 0);
  {
    auto eng = rng::engine(spec.seed, "synth", {0});
    std::vector<int> idx;
    for (int i = 1; i + 1 < static_cast<int>(base.size()); ++i) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), eng);
    for (int k = 0; k < 2 * n_drop && k < static_cast<int>(idx.size()); ++k) drop[idx[k]] = k < n_drop ? 1 : 2;
  }
  std::vector<Date> src_dates, tgt_dates;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (drop[i] != 1) src_dates.push_back(base[i]);
    if (drop[i] != 2) tgt_dates.push_back(base[i]);
  }
  const Eigen::Index Ts = static_cast<Eigen::Index>(src_dates.size());
  const Eigen::Index Tt = static_cast<Eigen::Index>(tgt_dates.size());

  // planted slopes
  SyntheticMarkets out;
  Matrix beta = Matrix::Zero(ns, nt);   // source j -> target i
  Matrix gamma = Matrix::Zero(nt, nt);  // target k -> target i
  {
    auto eng = rng::engine(spec.seed, "synth", {1});
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < nt; ++i)
      for (int j = 0; j < ns; ++j)
        if (U(eng) < spec.edge_density) beta(j, i) = spec.beta_min + (spec.beta_max - spec.beta_min) * U(eng);
    for (int i = 0; i < nt; ++i) {
      gamma(i, i) = spec.ar_coefficient;
      for (int k = 0; k < nt; ++k)
        if (k != i && U(eng) < spec.within_density) gamma(k, i) = spec.within_beta;
    }
  }

  // source market
  Components src{Matrix(Ts, ns + 1), Matrix(Ts, ns + 1)};
  {
    auto eng = rng::engine(spec.seed, "synth", {2});
    std::normal_distribution<double> N01(0.0, 1.0);
    const double sg = spec.source_sigma * std::sqrt(spec.gap_share);
    const double so = spec.source_sigma * std::sqrt(1.0 - spec.gap_share);
    const double mg = spec.market_sigma * std::sqrt(spec.gap_share);
    const double mo = spec.market_sigma * std::sqrt(1.0 - spec.gap_share);
    for (Eigen::Index t = 0; t < Ts; ++t) {
      for (int j = 0; j < ns; ++j) {
        src.gap(t, j) = sg * N01(eng);
        src.op(t, j) = so * N01(eng);
      }
      src.gap(t, ns) = mg * N01(eng);
      src.op(t, ns) = mo * N01(eng);
    }
  }

  // target market
  const auto pair = pair_dates(src_dates, spec.source_session, tgt_dates, spec.target_session, spec.true_lag);
  Components tgt{Matrix(Tt, nt + 1), Matrix(Tt, nt + 1)};
  {
    auto eng = rng::engine(spec.seed, "synth", {3});
    std::normal_distribution<double> N01(0.0, 1.0);
    const double mean_abs_etf = spec.market_sigma * std::sqrt(2.0 / std::numbers::pi);
    const double mg = spec.market_sigma * std::sqrt(spec.gap_share);
    const double mo = spec.market_sigma * std::sqrt(1.0 - spec.gap_share);
    Eigen::VectorXd x(ns), y_prev = Eigen::VectorXd::Zero(nt);
    for (Eigen::Index t = 0; t < Tt; ++t) {
      const auto p = pair[t];
      double mult = 1.0;
      if (p >= 0) {
        for (int j = 0; j < ns; ++j) x(j) = src.gap(p, j) + src.op(p, j);
        const double e = std::abs(src.gap(p, ns) + src.op(p, ns));
        if (spec.shock_coupling > 0 && mean_abs_etf > 0)
          mult = (1.0 - spec.shock_coupling) + spec.shock_coupling * e / mean_abs_etf;
      } else {
        x.setZero();
      }
      const Eigen::VectorXd planted = mult * (beta.transpose() * x) + gamma.transpose() * y_prev;
      for (int i = 0; i < nt; ++i) {
        tgt.gap(t, i) = spec.target_gap_sigma * N01(eng);
        tgt.op(t, i) = planted(i) + spec.noise_sigma * N01(eng);
        y_prev(i) = tgt.gap(t, i) + tgt.op(t, i);
      }
      tgt.gap(t, nt) = mg * N01(eng);
      tgt.op(t, nt) = mo * N01(eng);
    }
  }

  std::vector<std::string> src_names, tgt_names, src_sectors, tgt_sectors;
  for (int j = 0; j < ns; ++j) {
    src_names.push_back(ticker_name(spec.source_prefix, j));
    src_sectors.push_back("S" + std::to_string(j % spec.sector_count + 1));
  }
  src_names.push_back(spec.source_etf);
  src_sectors.push_back("ETF");
  for (int i = 0; i < nt; ++i) {
    tgt_names.push_back(ticker_name(spec.target_prefix, i));
    tgt_sectors.push_back("S" + std::to_string(i % spec.sector_count + 1));
  }
  tgt_names.push_back(spec.target_etf);
  tgt_sectors.push_back("ETF");

  {
    auto eng = rng::engine(spec.seed, "synth", {4});
    out.source = assemble(spec.source_market, src_dates, src_names, ns, src, src_sectors, eng);
  }
  {
    auto eng = rng::engine(spec.seed, "synth", {5});
    out.target = assemble(spec.target_market, tgt_dates, tgt_names, nt, tgt, tgt_sectors, eng);
  }

  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < ns; ++j)
      if (beta(j, i) != 0.0) out.edges.push_back({src_names[j], tgt_names[i], beta(j, i), spec.true_lag});
  for (int i = 0; i < nt; ++i)
    for (int k = 0; k < nt; ++k)
      if (gamma(k, i) != 0.0) out.within_edges.push_back({tgt_names[k], tgt_names[i], gamma(k, i), 1});
  auto by_name = [](const PlantedEdge& a, const PlantedEdge& b) {
    return std::tie(a.target, a.source) < std::tie(b.target, b.source);
  };
  std::sort(out.edges.begin(), out.edges.end(), by_name);
  std::sort(out.within_edges.begin(), out.within_edges.end(), by_name);
  return out;
}

void write_planted_edges(const std::vector<PlantedEdge>& edges, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f.precision(17);
  f << "source,target,beta,lag\n";
  for (const auto& e : edges) f << e.source << ',' << e.target << ',' << e.beta << ',' << e.lag << '\n';
}

Recovery recovery_metrics(const BipartiteGraph& graph, const std::vector<PlantedEdge>& planted) {
  std::map<std::pair<std::string, std::string>, double> truth;
  for (const auto& e : planted) truth[{e.source, e.target}] = e.beta;
  Recovery r;
  r.planted = truth.size();
  for (const auto& e : graph.edges()) {
    ++r.found;
    const auto it = truth.find({graph.source_tickers[e.source], graph.target_tickers[e.target]});
    if (it != truth.end() && (e.t_beta > 0) == (it->second > 0) && e.t_beta != 0.0) ++r.true_positives;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.precision = r.found ? static_cast<double>(r.true_positives) / r.found : nan;
  r.recall = r.planted ? static_cast<double>(r.true_positives) / r.planted : nan;
  return r;
}

}  // namespace xmkt

#include "xmkt/screening.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "xmkt/error.hpp"
#include "xmkt/parallel.hpp"
#include "xmkt/rng.hpp"
#include "xmkt/simd/kernels.hpp"
#include "xmkt/stats.hpp"

namespace xmkt {
namespace {

// Near-collinear pairs are recomputed with an explicit residual pass; the
// moment formula SSE = Syy - beta * Sxy loses digits there.
constexpr double kRefineRelSse = 1e-6;

bool window_complete(const Matrix& m, Eigen::Index col, std::size_t first, std::size_t w) {
  for (std::size_t r = first; r < first + w; ++r) {
    if (std::isnan(m(static_cast<Eigen::Index>(r), col))) return false;
  }
  return true;
}

bool is_constant(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *lo == *hi;
}

double t_from_moments(double sxy, double sxx, double syy, double sum_y2, std::size_t w, bool& perfect) {
  const double beta = sxy / sxx;
  const double sse = std::max(syy - beta * sxy, 0.0);
  perfect = sse <= kPerfectFitRelSse * sum_y2;
  if (perfect) return beta == 0.0 ? 0.0 : std::copysign(kPerfectFitT, beta);
  return beta * std::sqrt(sxx) / std::sqrt(sse / static_cast<double>(w - 2));
}

}  // namespace

void ScreenConfig::validate() const {
  if (window < 3) throw Error(ErrorCode::InvalidConfig, "screening window must be at least 3");
  if (lag < 0) throw Error(ErrorCode::InvalidConfig, "lag must be non-negative");
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold tau must be positive");
  if (max_predictors && *max_predictors < 1) throw Error(ErrorCode::InvalidConfig, "max_predictors must be >= 1");
  if (bh_fdr && !(*bh_fdr > 0.0 && *bh_fdr < 1.0)) throw Error(ErrorCode::InvalidConfig, "bh_fdr must be in (0,1)");
}

PairStat pair_tstat(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw Error(ErrorCode::DimensionMismatch, "pair_tstat needs equal-length vectors of length >= 3");
  }
  const std::size_t w = x.size();
  const double n = static_cast<double>(w);
  double xbar = 0.0;
  double ybar = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= n;
  ybar /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double sum_y2 = 0.0;
  for (std::size_t i = 0; i < w; ++i) {
    const double dx = x[i] - xbar;
    sxx += dx * dx;
    sxy += dx * (y[i] - ybar);
    sum_y2 += y[i] * y[i];
  }
  PairStat s;
  s.x_var_sum = sxx;
  if (is_constant(x)) {
    s.status = PairStatus::ConstantPredictor;
    s.alpha = ybar;
    for (std::size_t i = 0; i < w; ++i) s.sse += (y[i] - ybar) * (y[i] - ybar);
    return s;
  }
  s.beta = sxy / sxx;
  s.alpha = ybar - s.beta * xbar;
  for (std::size_t i = 0; i < w; ++i) {
    const double r = y[i] - (s.alpha + s.beta * x[i]);
    s.sse += r * r;
  }
  if (s.sse <= kPerfectFitRelSse * sum_y2) {
    s.status = PairStatus::PerfectFit;
    s.t_beta = s.beta == 0.0 ? 0.0 : std::copysign(kPerfectFitT, s.beta);
    return s;
  }
  const double se = std::sqrt(s.sse / (n - 2.0));
  s.t_beta = s.beta / (se / std::sqrt(sxx));
  return s;
}

std::size_t BipartiteGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& e : in_edges) n += e.size();
  return n;
}

std::vector<int> BipartiteGraph::in_degrees() const {
  std::vector<int> d;
  d.reserve(in_edges.size());
  for (const auto& e : in_edges) d.push_back(static_cast<int>(e.size()));
  return d;
}

Matrix BipartiteGraph::biadjacency() const {
  Matrix b = Matrix::Zero(static_cast<Eigen::Index>(target_tickers.size()),
                          static_cast<Eigen::Index>(source_tickers.size()));
  for (const auto& list : in_edges) {
    for (const auto& e : list) b(e.target, e.source) = e.t_beta;
  }
  return b;
}

std::vector<Edge> BipartiteGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (const auto& list : in_edges) out.insert(out.end(), list.begin(), list.end());
  return out;
}

AlignedSource align_source(const ReturnPanel& source, Session source_session,
                           const std::vector<Date>& target_dates, Session target_session, int lag) {
  const auto pairing = pair_dates(source.dates, source_session, target_dates, target_session, lag);
  AlignedSource a;
  a.tickers = source.tickers;
  a.values.setConstant(static_cast<Eigen::Index>(target_dates.size()), static_cast<Eigen::Index>(source.tickers.size()),
                       kMissing);
  for (std::size_t u = 0; u < pairing.size(); ++u) {
    if (pairing[u] >= 0) a.values.row(static_cast<Eigen::Index>(u)) = source.values.row(pairing[u]);
  }
  return a;
}

BipartiteGraph build_graph(const AlignedSource& source, const std::vector<std::string>& target_tickers,
                           const Matrix& target, std::size_t as_of_index, Date as_of,
                           const ScreenConfig& config, int workers, ScreenDiagnostics* diagnostics) {
  config.validate();
  const auto w = static_cast<std::size_t>(config.window);
  if (as_of_index < w || as_of_index > static_cast<std::size_t>(target.rows()) ||
      source.values.rows() != target.rows()) {
    throw Error(ErrorCode::WindowUnavailable, "screening window [t-w, t-1] is outside the data", as_of.iso());
  }
  if (static_cast<std::size_t>(target.cols()) != target_tickers.size()) {
    throw Error(ErrorCode::DimensionMismatch, "target tickers do not match the target matrix");
  }
  const std::size_t first = as_of_index - w;
  const auto& k = simd::active_kernels();

  BipartiteGraph g;
  g.source_tickers = source.tickers;
  g.target_tickers = target_tickers;
  g.in_edges.resize(target_tickers.size());
  g.source_eligible.assign(source.tickers.size(), 0);
  g.as_of = as_of;
  g.config = config;
  ScreenDiagnostics local;
  ScreenDiagnostics& diag = diagnostics ? *diagnostics : local;

  // Gather complete windows, winsorize, then keep raw and centered copies.
  struct Columns {
    std::vector<std::size_t> index;
    std::vector<double> raw, centered, ss, sum_sq;
    std::vector<char> constant;
  };
  auto gather = [&](const Matrix& m, std::size_t ncols, const std::vector<std::string>& names,
                    std::vector<std::string>& skipped) {
    Columns c;
    std::vector<double> scratch;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (!window_complete(m, static_cast<Eigen::Index>(j), first, w)) {
        skipped.push_back(names[j]);
        continue;
      }
      c.index.push_back(j);
    }
    c.raw.resize(c.index.size() * w);
    c.centered.resize(c.index.size() * w);
    c.ss.resize(c.index.size());
    c.sum_sq.resize(c.index.size());
    c.constant.resize(c.index.size());
    for (std::size_t a = 0; a < c.index.size(); ++a) {
      double* raw = c.raw.data() + a * w;
      for (std::size_t r = 0; r < w; ++r) {
        raw[r] = m(static_cast<Eigen::Index>(first + r), static_cast<Eigen::Index>(c.index[a]));
      }
      if (config.winsorize) winsorize_in_place({raw, w}, scratch);
      const auto mom = k.moments(raw, w);
      k.center(raw, w, mom.mean, c.centered.data() + a * w);
      c.ss[a] = mom.centered_ss;
      c.sum_sq[a] = mom.centered_ss + static_cast<double>(w) * mom.mean * mom.mean;
      c.constant[a] = is_constant({raw, w});
    }
    return c;
  };
  const Columns src = gather(source.values, source.tickers.size(), source.tickers, diag.skipped_sources);
  const Columns tgt = gather(target, target_tickers.size(), target_tickers, diag.skipped_targets);
  for (std::size_t idx : src.index) g.source_eligible[idx] = 1;

  const std::size_t ns = src.index.size();
  const std::size_t nt = tgt.index.size();
  std::vector<double> tstat(nt * ns, 0.0);
  std::vector<char> status(nt * ns, 0);  // 0 ok, 1 constant, 2 perfect fit
  constexpr std::size_t kBlock = 16;
  const std::size_t blocks = (nt + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t a0 = b * kBlock;
    const std::size_t na = std::min(kBlock, nt - a0);
    std::vector<double> sxy(na * ns);
    k.cross(tgt.centered.data() + a0 * w, w, na, src.centered.data(), w, ns, w, sxy.data(), ns);
    for (std::size_t a = 0; a < na; ++a) {
      const std::size_t ti = a0 + a;
      for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t cell = ti * ns + s;
        if (src.constant[s]) {
          status[cell] = 1;
          continue;
        }
        const double cross = sxy[a * ns + s];
        const double beta = cross / src.ss[s];
        const double sse = tgt.ss[ti] - beta * cross;
        if (sse < kRefineRelSse * tgt.ss[ti]) {
          const PairStat p = pair_tstat({src.raw.data() + s * w, w}, {tgt.raw.data() + ti * w, w});
          tstat[cell] = p.t_beta;
          status[cell] = p.status == PairStatus::PerfectFit ? 2 : 0;
        } else {
          bool perfect = false;
          tstat[cell] = t_from_moments(cross, src.ss[s], tgt.ss[ti], tgt.sum_sq[ti], w, perfect);
          status[cell] = perfect ? 2 : 0;
        }
      }
    }
  });

  const bool exclude_self = !config.allow_self_edges;
  auto tested = [&](std::size_t ti, std::size_t s) {
    if (status[ti * ns + s] == 1) return false;
    return !(exclude_self && source.tickers[src.index[s]] == target_tickers[tgt.index[ti]]);
  };

  double p_cut = 1.0;
  if (config.bh_fdr) {
    const boost::math::students_t dist(static_cast<double>(w - 2));
    std::vector<double> p;
    p.reserve(nt * ns);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      for (std::size_t s = 0; s < ns; ++s) {
        if (!tested(ti, s)) continue;
        const double t = std::abs(tstat[ti * ns + s]);
        p.push_back(status[ti * ns + s] == 2 ? 0.0 : 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
      }
    }
    std::sort(p.begin(), p.end());
    p_cut = -1.0;
    const double m = static_cast<double>(p.size());
    for (std::size_t r = p.size(); r-- > 0;) {
      if (p[r] <= *config.bh_fdr * static_cast<double>(r + 1) / m) {
        p_cut = p[r];
        break;
      }
    }
  }
  const boost::math::students_t bh_dist(static_cast<double>(w - 2));

  for (std::size_t ti = 0; ti < nt; ++ti) {
    const int target = static_cast<int>(tgt.index[ti]);
    auto& list = g.in_edges[static_cast<std::size_t>(target)];
    for (std::size_t s = 0; s < ns; ++s) {
      const std::size_t cell = ti * ns + s;
      if (status[cell] == 1) ++diag.constant_pairs;
      if (status[cell] == 2) ++diag.perfect_fit_pairs;
      if (!tested(ti, s)) continue;
      const double t = tstat[cell];
      if (!(std::abs(t) > config.tau)) continue;
      if (config.bh_fdr) {
        const double p =
            status[cell] == 2 ? 0.0 : 2.0 * boost::math::cdf(boost::math::complement(bh_dist, std::abs(t)));
        if (!(p <= p_cut)) continue;
      }
      list.push_back({static_cast<int>(src.index[s]), target, t, false});
    }
    if (config.max_predictors && list.size() > static_cast<std::size_t>(*config.max_predictors)) {
      std::sort(list.begin(), list.end(), [&](const Edge& a, const Edge& b) {
        const double fa = std::abs(a.t_beta);
        const double fb = std::abs(b.t_beta);
        if (fa != fb) return fa > fb;
        return source.tickers[static_cast<std::size_t>(a.source)] < source.tickers[static_cast<std::size_t>(b.source)];
      });
      list.resize(static_cast<std::size_t>(*config.max_predictors));
      std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.source < b.source; });
    }
  }
  return g;
}

BipartiteGraph build_graph(const ReturnPanel& source, Session source_session, const ReturnPanel& target,
                           Session target_session, const ScreenConfig& config, Date as_of, int workers,
                           ScreenDiagnostics* diagnostics) {
  config.validate();
  const auto aligned = align_source(source, source_session, target.dates, target_session, config.lag);
  const auto it = std::lower_bound(target.dates.begin(), target.dates.end(), as_of);
  return build_graph(aligned, target.tickers, target.values, static_cast<std::size_t>(it - target.dates.begin()),
                     as_of, config, workers, diagnostics);
}

std::array<double, 3> in_degree_percentiles(const BipartiteGraph& graph) {
  std::vector<double> d;
  for (int v : graph.in_degrees()) d.push_back(v);
  if (d.empty()) return {0.0, 0.0, 0.0};
  std::sort(d.begin(), d.end());
  return {stats::percentile_sorted(d, 25.0), stats::percentile_sorted(d, 50.0), stats::percentile_sorted(d, 75.0)};
}

Matrix time_average_biadjacency(std::span<const BipartiteGraph> graphs) {
  if (graphs.empty()) throw Error(ErrorCode::EmptyInput, "no graphs to average");
  Matrix sum = graphs.front().biadjacency();
  for (std::size_t i = 1; i < graphs.size(); ++i) {
    if (graphs[i].source_tickers != graphs.front().source_tickers ||
        graphs[i].target_tickers != graphs.front().target_tickers) {
      throw Error(ErrorCode::TickerSetMismatch, "graphs do not share ticker sets", graphs[i].as_of.iso());
    }
    sum += graphs[i].biadjacency();
  }
  return sum / static_cast<double>(graphs.size());
}

SectorMatrix sector_block_median_abs(const Matrix& matrix, const std::vector<std::string>& source_sectors,
                                     const std::vector<std::string>& target_sectors) {
  if (static_cast<std::size_t>(matrix.rows()) != target_sectors.size() ||
      static_cast<std::size_t>(matrix.cols()) != source_sectors.size()) {
    throw Error(ErrorCode::DimensionMismatch, "sector maps do not match matrix dimensions");
  }
  auto labels = [](const std::vector<std::string>& v, const char* side) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i].empty()) throw Error(ErrorCode::UnlabeledTicker, std::string(side) + " ticker without sector", std::to_string(i));
    }
    std::vector<std::string> u = v;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  };
  SectorMatrix out;
  out.target_sectors = labels(target_sectors, "target");
  out.source_sectors = labels(source_sectors, "source");
  const auto nr = out.target_sectors.size();
  const auto nc = out.source_sectors.size();
  std::vector<std::vector<double>> blocks(nr * nc);
  auto pos = [](const std::vector<std::string>& u, const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(u.begin(), u.end(), s) - u.begin());
  };
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    const auto r = pos(out.target_sectors, target_sectors[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const auto c = pos(out.source_sectors, source_sectors[static_cast<std::size_t>(j)]);
      blocks[r * nc + c].push_back(std::abs(matrix(i, j)));
    }
  }
  out.values.resize(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = stats::median(blocks[r * nc + c]);
    }
  }
  return out;
}

BipartiteGraph randomize_edges(const BipartiteGraph& graph, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error(ErrorCode::InvalidConfig, "fraction must be in [0,1]");
  BipartiteGraph out = graph;
  if (fraction == 0.0) return out;
  const std::size_t ns = graph.source_tickers.size();
  for (std::size_t t = 0; t < graph.in_edges.size(); ++t) {
    auto& list = out.in_edges[t];
    const auto m = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(list.size()) + 0.5));
    if (m == 0) continue;
    std::vector<char> connected(ns, 0);
    for (const auto& e : list) connected[static_cast<std::size_t>(e.source)] = 1;
    std::vector<int> candidates;
    for (std::size_t s = 0; s < ns; ++s) {
      const bool eligible = graph.source_eligible.empty() || graph.source_eligible[s];
      const bool self = !graph.config.allow_self_edges && graph.source_tickers[s] == graph.target_tickers[t];
      if (!connected[s] && eligible && !self) candidates.push_back(static_cast<int>(s));
    }
    if (candidates.size() < m) {
      throw Error(ErrorCode::InsufficientCandidates,
                  "target needs " + std::to_string(m) + " replacement sources but only " +
                      std::to_string(candidates.size()) + " are unconnected",
                  graph.target_tickers[t]);
    }
    auto eng = rng::engine(seed, "randomize_edges", {t});
    // Partial Fisher-Yates on both the incident edges and the candidates.
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, list.size() - 1);
      std::swap(list[i], list[pick(eng)]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
      std::swap(candidates[i], candidates[pick(eng)]);
      list[i].source = candidates[i];
      list[i].synthetic = true;
    }
    std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.source < b.source; });
  }
  return out;
}

}  // namespace xmkt

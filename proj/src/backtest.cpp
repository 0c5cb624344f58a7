#include "xmkt/backtest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

#include "xmkt/error.hpp"
#include "xmkt/parallel.hpp"
#include "xmkt/rng.hpp"
#include "xmkt/stats.hpp"

namespace xmkt {

namespace {

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

Eigen::Index first_valid_row(const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!std::isnan(m(r, c))) return r;
  return m.rows();
}

struct Feature {
  int block = 0;
  int column = 0;  // source column, or AR lag - 1
};

// Per target, the predictors chosen at a rebuild.
using FeatureList = std::vector<Feature>;

double feature_value(const FeaturePlan& plan, const Feature& f, Eigen::Index row, Eigen::Index target) {
  if (plan.kind == FeaturePlan::Kind::Graph) return plan.blocks[f.block].aligned.values(row, f.column);
  const Eigen::Index r = row - 1 - f.column;
  return r >= 0 ? plan.ar_returns(r, target) : kMissing;
}

BipartiteGraph merge_blocks(std::vector<BipartiteGraph> graphs, std::vector<int>& block_of_source,
                            std::vector<int>& column_of_source) {
  BipartiteGraph out = graphs.front();
  out.source_tickers.clear();
  out.source_eligible.clear();
  for (auto& e : out.in_edges) e.clear();
  block_of_source.clear();
  column_of_source.clear();
  int offset = 0;
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const auto& g = graphs[b];
    for (std::size_t j = 0; j < g.source_tickers.size(); ++j) {
      out.source_tickers.push_back(g.source_tickers[j]);
      out.source_eligible.push_back(g.source_eligible[j]);
      block_of_source.push_back(static_cast<int>(b));
      column_of_source.push_back(static_cast<int>(j));
    }
    for (std::size_t t = 0; t < g.in_edges.size(); ++t)
      for (Edge e : g.in_edges[t]) {
        e.source += offset;
        out.in_edges[t].push_back(e);
      }
    offset += static_cast<int>(g.source_tickers.size());
  }
  return out;
}

}  // namespace

void BacktestConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (window < 3) fail("window must be at least 3");
  if (retrain_every < 1) fail("retrain_every must be at least 1");
  if (quantile_fractions.empty()) fail("quantile_fractions is empty");
  for (std::size_t k = 0; k < quantile_fractions.size(); ++k) {
    const double f = quantile_fractions[k];
    if (!(f > 0 && f <= 1)) fail("quantile fractions must lie in (0, 1]");
    if (k > 0 && !(f < quantile_fractions[k - 1])) fail("quantile fractions must be strictly decreasing");
  }
  if (!(position_cap >= 0) || !(bps_of_mdv >= 0)) fail("position sizing parameters must be non-negative");
  if (span_days && *span_days < 1) fail("span_days must be positive");
}

double default_position_cap(std::string_view market_id) { return market_id == "CN" ? 1.5e6 : 1e5; }

BacktestData make_backtest_data(const PricePanel& prices, const std::vector<std::string>& tickers) {
  BacktestData d;
  d.prices = &prices;
  ReturnPanel ex = excess_returns(prices, ReturnKind::OPCL);
  ex = tickers.empty() ? drop_ticker(ex, prices.etf_ticker) : select_tickers(ex, tickers);
  d.tickers = ex.tickers;
  d.dates = prices.dates;
  d.returns = reindex_rows(ex, prices.dates);
  return d;
}

const ModelSeries& BacktestReport::model(std::string_view name) const {
  for (const auto& m : models)
    if (m.name == name) return m;
  throw Error(ErrorCode::InvalidConfig, "report has no model " + std::string(name));
}

std::vector<ModelSpec> default_model_specs() {
  std::vector<ModelSpec> out;
  for (Method m : kBaseMethods) out.push_back(ModelSpec::defaults(m));
  return out;
}

double daily_pnl(std::span<const double> predictions, std::span<const double> realized,
                 std::span<const double> capital) {
  if (predictions.size() != realized.size() || predictions.size() != capital.size())
    throw Error(ErrorCode::DimensionMismatch, "daily_pnl inputs differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) acc += sign(predictions[i]) * realized[i] * capital[i];
  return acc;
}

double position_size(double mdv, double bps, double cap) { return std::min(bps * mdv, cap); }

double sharpe_ratio(std::span<const double> pnl) {
  if (pnl.size() < 2) throw Error(ErrorCode::EmptyInput, "Sharpe ratio needs at least two days");
  const double sd = stats::sample_sd(pnl);
  const double mu = stats::mean(pnl);
  if (!(sd > 0) || sd <= 1e-14 * std::abs(mu)) throw Error(ErrorCode::ZeroVolatility, "PnL series has zero volatility");
  return mu / sd * std::sqrt(252.0);
}

double sharpe_or_nan(std::span<const double> pnl) {
  try {
    return sharpe_ratio(pnl);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::vector<std::size_t> quantile_sizes(std::size_t n, std::span<const double> fractions) {
  std::vector<std::size_t> out;
  for (double f : fractions) {
    const double v = std::ceil(f * static_cast<double>(n) - 1e-9);
    out.push_back(std::min(n, static_cast<std::size_t>(std::max(0.0, v))));
  }
  return out;
}

std::vector<int> rank_by_magnitude(std::span<const double> predictions, std::span<const std::string> tickers) {
  std::vector<int> idx(predictions.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double ma = std::abs(predictions[a]), mb = std::abs(predictions[b]);
    if (ma != mb) return ma > mb;
    return tickers[a] < tickers[b];
  });
  return idx;
}

std::vector<std::vector<std::string>> quantile_portfolios(std::span<const double> predictions,
                                                          std::span<const std::string> tickers,
                                                          std::span<const double> fractions) {
  const auto order = rank_by_magnitude(predictions, tickers);
  std::vector<std::vector<std::string>> out;
  for (std::size_t size : quantile_sizes(order.size(), fractions)) {
    std::vector<std::string> q;
    for (std::size_t k = 0; k < size; ++k) q.push_back(tickers[order[k]]);
    out.push_back(std::move(q));
  }
  return out;
}

double median_sharpe(const BacktestReport& report, std::size_t quantile) {
  std::vector<double> v;
  for (const auto& m : report.models) {
    const double s = m.sharpe.at(quantile);
    v.push_back(std::isnan(s) ? 0.0 : s);
  }
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "report has no models");
  return stats::median(v);
}

PredictionSpan prediction_span(const BacktestData& data, const FeaturePlan& plan, const BacktestConfig& config) {
  config.validate();
  const Eigen::Index T = data.returns.rows();
  const Eigen::Index N = data.returns.cols();
  if (static_cast<std::size_t>(T) != data.dates.size() || static_cast<std::size_t>(N) != data.tickers.size())
    throw Error(ErrorCode::DimensionMismatch, "backtest returns do not match dates/tickers");

  // warm-up: first row where every feature source has data
  Eigen::Index first = first_valid_row(data.returns);
  if (plan.kind == FeaturePlan::Kind::Graph) {
    if (plan.blocks.empty()) throw Error(ErrorCode::InvalidConfig, "graph features need a source block");
    for (const auto& b : plan.blocks) {
      if (b.aligned.values.rows() != T) throw Error(ErrorCode::DimensionMismatch, "source block not on target dates");
      if (b.screen.window != config.window)
        throw Error(ErrorCode::InvalidConfig, "screening and training windows differ");
      first = std::max(first, first_valid_row(b.aligned.values));
    }
  } else {
    if (plan.ar_returns.rows() != T || plan.ar_returns.cols() != N)
      throw Error(ErrorCode::DimensionMismatch, "AR returns not on target dates");
    if (plan.ar_lags < 1) throw Error(ErrorCode::InvalidConfig, "ar_lags must be positive");
    first = std::max(first, first_valid_row(plan.ar_returns) + plan.ar_lags);
  }
  const Eigen::Index earliest = first + config.window;
  Eigen::Index start = earliest;
  if (config.start) {
    start = std::lower_bound(data.dates.begin(), data.dates.end(), *config.start) - data.dates.begin();
    if (start < earliest)
      throw Error(ErrorCode::SpanUnavailable, "prediction start leaves no full training window", config.start->iso());
  }
  Eigen::Index end = T - 1;
  if (config.end) end = (std::upper_bound(data.dates.begin(), data.dates.end(), *config.end) - data.dates.begin()) - 1;
  if (config.span_days) end = std::min<Eigen::Index>(end, start + *config.span_days - 1);
  if (start > end || start >= T)
    throw Error(ErrorCode::SpanUnavailable, "no prediction dates with a full training window",
                start < T ? data.dates[start].iso() : std::string{});

  return {static_cast<std::size_t>(start), static_cast<std::size_t>(end)};
}

BacktestReport run_backtest(const BacktestData& data, const FeaturePlan& plan, const std::vector<ModelSpec>& specs,
                            const BacktestConfig& config, std::uint64_t seed, int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  if (!data.prices) throw Error(ErrorCode::InvalidConfig, "backtest data has no price panel");
  if (specs.empty()) throw Error(ErrorCode::InvalidConfig, "no models to run");
  for (const auto& s : specs) {
    if (is_ensemble(s.method)) throw Error(ErrorCode::InvalidConfig, "ensembles are derived, not listed");
    s.validate();
  }
  const auto span = prediction_span(data, plan, config);
  const Eigen::Index N = data.returns.cols();
  const Eigen::Index start = static_cast<Eigen::Index>(span.start);
  const Eigen::Index end = static_cast<Eigen::Index>(span.end);

  const bool with_ensembles = specs.size() == kBaseMethods.size() && [&] {
    for (std::size_t m = 0; m < specs.size(); ++m)
      if (specs[m].method != kBaseMethods[m]) return false;
    return true;
  }();
  const std::size_t M = specs.size();
  const std::size_t M_out = M + (with_ensembles ? 2 : 0);
  const std::size_t Q = config.quantile_fractions.size();
  const std::size_t D = static_cast<std::size_t>(end - start + 1);

  BacktestReport report;
  report.tickers = data.tickers;
  report.quantile_fractions = config.quantile_fractions;
  for (Eigen::Index u = start; u <= end; ++u) report.dates.push_back(data.dates[u]);
  report.models.resize(M_out);
  for (std::size_t m = 0; m < M; ++m) report.models[m].name = std::string(to_string(specs[m].method));
  if (with_ensembles) {
    report.models[M].name = "ENS_AVG";
    report.models[M + 1].name = "ENS_MED";
  }
  for (auto& ms : report.models) {
    ms.daily.assign(Q, std::vector<double>(D, 0.0));
    ms.records.resize(D);
  }

  // mdv lookups are shared by every model
  std::vector<std::ptrdiff_t> price_col(N);
  for (Eigen::Index i = 0; i < N; ++i) price_col[i] = data.prices->ticker_index(data.tickers[i]);

  std::vector<FeatureList> features(N);
  std::vector<std::vector<std::optional<FittedModel>>> fitted(N);
  std::vector<double> x, preds(M);
  int rebuild = 0;

  for (Eigen::Index u = start; u <= end; ++u) {
    const std::size_t day = static_cast<std::size_t>(u - start);
    if (day % static_cast<std::size_t>(config.retrain_every) == 0) {
      RebuildRecord rec;
      rec.date = data.dates[u];
      for (auto& f : features) f.clear();
      if (plan.kind == FeaturePlan::Kind::Graph) {
        std::vector<BipartiteGraph> graphs;
        ScreenDiagnostics diag;
        for (const auto& b : plan.blocks)
          graphs.push_back(build_graph(b.aligned, data.tickers, data.returns, static_cast<std::size_t>(u),
                                       data.dates[u], b.screen, workers, &diag));
        std::vector<int> block_of, column_of;
        BipartiteGraph g = merge_blocks(std::move(graphs), block_of, column_of);
        if (plan.randomize_fraction)
          g = randomize_edges(g, *plan.randomize_fraction,
                              rng::derive(seed, "randomize_edges", {static_cast<std::uint64_t>(rebuild)}));
        rec.edges = g.edge_count();
        rec.skipped = diag.skipped_targets;
        for (Eigen::Index i = 0; i < N; ++i)
          for (const Edge& e : g.in_edges[i]) features[i].push_back({block_of[e.source], column_of[e.source]});
      } else {
        for (Eigen::Index i = 0; i < N; ++i)
          for (int k = 0; k < plan.ar_lags; ++k) features[i].push_back({0, k});
      }

      // assemble training sets; any gap in the window skips the stock
      std::vector<std::optional<TrainSet>> train(N);
      for (Eigen::Index i = 0; i < N; ++i) {
        if (features[i].empty()) continue;
        TrainSet ts;
        const Eigen::Index k = static_cast<Eigen::Index>(features[i].size());
        ts.X.resize(config.window, k);
        ts.y.resize(config.window);
        bool complete = true;
        for (Eigen::Index r = 0; r < config.window && complete; ++r) {
          const Eigen::Index row = u - config.window + r;
          ts.y(r) = data.returns(row, i);
          complete = !std::isnan(ts.y(r));
          for (Eigen::Index c = 0; c < k && complete; ++c) {
            ts.X(r, c) = feature_value(plan, features[i][c], row, i);
            complete = !std::isnan(ts.X(r, c));
          }
        }
        if (!complete) {
          rec.skipped.push_back(data.tickers[i]);
          features[i].clear();
          continue;
        }
        for (const auto& f : features[i]) {
          if (plan.kind == FeaturePlan::Kind::Graph)
            ts.feature_ids.push_back(plan.blocks[f.block].aligned.tickers[f.column]);
          else
            ts.feature_ids.push_back("lag" + std::to_string(f.column + 1));
        }
        if (config.winsorize_training) {
          std::vector<double> scratch;
          for (Eigen::Index c = 0; c < k; ++c)
            winsorize_in_place(std::span<double>(ts.X.col(c).data(), config.window), scratch);
          winsorize_in_place(std::span<double>(ts.y.data(), config.window), scratch);
        }
        train[i] = std::move(ts);
      }
      std::vector<int> nonconverged(N, 0);
      parallel_for(static_cast<std::size_t>(N), workers, [&](std::size_t i) {
        fitted[i].assign(M, std::nullopt);
        if (!train[i]) return;
        for (std::size_t m = 0; m < M; ++m) {
          ModelSpec s = specs[m];
          s.hp.seed = rng::derive(seed, "model",
                                  {static_cast<std::uint64_t>(s.method), i, static_cast<std::uint64_t>(rebuild)});
          fitted[i][m] = fit(s, *train[i]);
          if (!fitted[i][m]->diagnostics().converged) ++nonconverged[i];
        }
      });
      for (Eigen::Index i = 0; i < N; ++i) {
        rec.modeled_targets += train[i] ? 1 : 0;
        rec.nonconverged_fits += nonconverged[i];
      }
      report.rebuilds.push_back(std::move(rec));
      ++rebuild;
    }

    // predict and score day u
    std::vector<std::vector<StockRecord>> day_records(M_out);
    for (Eigen::Index i = 0; i < N; ++i) {
      if (features[i].empty() || !fitted[i][0]) continue;
      const double realized = data.returns(u, i);
      if (std::isnan(realized)) continue;
      x.resize(features[i].size());
      bool ok = true;
      for (std::size_t c = 0; c < x.size() && ok; ++c) {
        x[c] = feature_value(plan, features[i][c], u, i);
        ok = !std::isnan(x[c]);
      }
      if (!ok) continue;
      double capital = 0.0;
      if (price_col[i] >= 0) {
        try {
          capital = position_size(mdv21(*data.prices, static_cast<std::size_t>(price_col[i]), static_cast<std::size_t>(u)),
                                  config.bps_of_mdv, config.position_cap);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InsufficientHistory) throw;
        }
      }
      for (std::size_t m = 0; m < M; ++m) preds[m] = fitted[i][m]->predict(x);
      auto push = [&](std::size_t m, double s) {
        day_records[m].push_back({static_cast<int>(i), s, realized, capital, sign(s) * realized * capital});
      };
      for (std::size_t m = 0; m < M; ++m) push(m, preds[m]);
      if (with_ensembles) {
        push(M, ensemble_predict(preds, EnsembleMode::Average));
        push(M + 1, ensemble_predict(preds, EnsembleMode::Median));
      }
    }
    for (std::size_t m = 0; m < M_out; ++m) {
      auto& recs = day_records[m];
      std::sort(recs.begin(), recs.end(), [&](const StockRecord& a, const StockRecord& b) {
        const double ma = std::abs(a.prediction), mb = std::abs(b.prediction);
        if (ma != mb) return ma > mb;
        return data.tickers[a.stock] < data.tickers[b.stock];
      });
      const auto sizes = quantile_sizes(recs.size(), config.quantile_fractions);
      auto& ms = report.models[m];
      for (std::size_t q = 0; q < Q; ++q) {
        double acc = 0.0;
        for (std::size_t k = 0; k < sizes[q]; ++k) acc += recs[k].pnl;
        ms.daily[q][day] = acc;
      }
      ms.records[day] = std::move(recs);
    }
  }

  for (auto& ms : report.models) {
    ms.cumulative.resize(Q);
    ms.sharpe.resize(Q);
    for (std::size_t q = 0; q < Q; ++q) {
      ms.cumulative[q].resize(D);
      std::partial_sum(ms.daily[q].begin(), ms.daily[q].end(), ms.cumulative[q].begin());
      ms.sharpe[q] = sharpe_or_nan(ms.daily[q]);
    }
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace xmkt

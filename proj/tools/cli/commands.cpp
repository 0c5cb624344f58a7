#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>

#include "cli/config.hpp"
#include "xmkt/error.hpp"
#include "xmkt/report.hpp"

namespace xmkt::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = spdlog::stderr_logger_st("xmkt");
    l->set_pattern(R"({"time":"%Y-%m-%dT%H:%M:%S.%e","level":"%l","msg":"%v"})");
    return l;
  }();
  return log;
}

std::string category(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidHyperparameter:
    case ErrorCode::InvalidSpec: return "ConfigError";
    case ErrorCode::PlanError:
    case ErrorCode::SpanUnavailable:
    case ErrorCode::EmptySubset:
    case ErrorCode::WindowUnavailable:
    case ErrorCode::ZeroVolatility: return "PlanError";
    default: return "DataError";
  }
}

int exit_code(const std::string& cat) {
  if (cat == "ConfigError") return 2;
  if (cat == "DataError") return 3;
  if (cat == "PlanError") return 4;
  return 1;
}

int report_error(const std::string& cat, const std::string& code, const std::string& message,
                 const std::string& location) {
  json j = {{"error", cat}, {"code", code}, {"message", message}, {"location", location}};
  std::cerr << j.dump() << '\n';
  return exit_code(cat);
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string data_dir;
  std::string log_level = "info";
};

// Flags shared by graph/backtest/experiment.
struct RunFlags {
  std::optional<std::string> direction;
  std::optional<std::string> feature_kind;
  std::optional<int> lag;
  std::optional<double> tau;
  std::optional<int> window;
  std::optional<int> span_days;
  std::optional<std::string> as_of;
  std::string models;
  // experiment
  std::string kind;
  std::vector<double> fractions;
  std::vector<int> lags;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> target_market;
  std::optional<int> grid_span_days;
  std::optional<double> cn_tau;
  // synth
  std::optional<int> n_source, n_target, n_dates, true_lag, sector_count;
  std::optional<double> density, noise, shock_coupling;
  // validate / report
  std::vector<std::string> files;
  std::string run_dir;
};

struct Loaded {
  RunConfig config;
  std::optional<json> manifest;
};

Loaded load_config(const Globals& g) {
  Loaded l;
  if (!g.config.empty()) {
    json j = read_json(g.config);
    if (j.contains("config") && j.contains("command")) {
      l.manifest = j;
      j = j["config"];
    }
    merge_json(l.config, j);
  }
  auto& c = l.config;
  if (!g.data_dir.empty()) c.data_dir = g.data_dir;
  else if (const char* env = std::getenv("XMKT_DATA_DIR"); env && *env) c.data_dir = env;
  else if (l.manifest && l.manifest->contains("data_dir")) c.data_dir = (*l.manifest)["data_dir"].get<std::string>();
  else if (!g.config.empty()) c.data_dir = fs::path(g.config).parent_path();
  if (l.manifest) {
    // a rerun must see the same inputs
    for (const auto& [name, m] : {std::pair{"us", &c.us}, std::pair{"cn", &c.cn}}) {
      const auto& in = (*l.manifest)["inputs"];
      if (!in.contains(name)) continue;
      const auto path = c.data_dir.empty() ? fs::path(m->path) : c.data_dir / m->path;
      if (file_sha256(path) != in[name]["sha256"].get<std::string>())
        throw Error(ErrorCode::DateMismatch, "input differs from the manifest", path.string());
    }
  }
  if (g.seed) c.seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  if (c.workers < 1) throw Error(ErrorCode::ConfigError, "workers must be at least 1", "--workers");
  return l;
}

void apply_flags(RunConfig& c, const RunFlags& f) {
  if (f.direction) {
    if (*f.direction != "us_cn" && *f.direction != "cn_us")
      throw Error(ErrorCode::ConfigError, "expected us_cn or cn_us", "--direction");
    c.direction = *f.direction;
  }
  if (f.feature_kind) c.feature_kind = parse_return_kind(*f.feature_kind);
  if (f.lag) c.lag = *f.lag;
  if (f.tau) c.screen.tau = *f.tau;
  if (f.window) c.screen.window = *f.window;
  c.backtest.window = c.screen.window;
  if (f.span_days) c.backtest.span_days = *f.span_days;
  if (f.as_of) c.as_of = *f.as_of;
  if (!f.models.empty()) {
    c.models.clear();
    std::string item;
    std::stringstream ss(f.models);
    while (std::getline(ss, item, ',')) c.models.push_back(ModelSpec::defaults(parse_method(item)));
  }
  if (!f.kind.empty()) c.experiment.kind = parse_experiment_kind(f.kind);
  if (!f.fractions.empty()) c.experiment.fractions = f.fractions;
  if (!f.lags.empty()) c.experiment.lags = f.lags;
  if (!f.seeds.empty()) c.experiment.seeds = f.seeds;
  if (f.target_market) c.experiment.target_market = *f.target_market;
  if (f.grid_span_days) c.experiment.grid_span_days = *f.grid_span_days;
  if (f.cn_tau) c.experiment.cn_tau = *f.cn_tau;
  auto& s = c.synth;
  if (f.n_source) s.n_source = *f.n_source;
  if (f.n_target) s.n_target = *f.n_target;
  if (f.n_dates) s.n_dates = *f.n_dates;
  if (f.true_lag) s.true_lag = *f.true_lag;
  if (f.sector_count) s.sector_count = *f.sector_count;
  if (f.density) s.edge_density = *f.density;
  if (f.noise) s.noise_sigma = *f.noise;
  if (f.shock_coupling) s.shock_coupling = *f.shock_coupling;
  s.seed = c.seed;
  c.screen.validate();
  c.backtest.validate();
  for (const auto& m : c.models) m.validate();
}

fs::path resolve(const RunConfig& c, const std::string& path) {
  const fs::path p(path);
  if (p.is_absolute() || c.data_dir.empty()) return p;
  return c.data_dir / p;
}

PricePanel load_market(const RunConfig& c, const MarketConfig& m, bool strict) {
  const auto path = resolve(c, m.path);
  auto loaded = load_price_csv(path, m.market_id, m.etf);
  for (const auto& r : loaded.rejected_rows) {
    if (strict)
      throw Error(ErrorCode::UnparseableValue, r.message, path.string() + ":" + std::to_string(r.line));
    logger()->warn("rejected row {}:{} ({})", path.filename().string(), r.line, r.message);
  }
  loaded.panel.validate();
  if (m.universe == 0) return std::move(loaded.panel);
  UniverseOptions opt;
  opt.mode = c.universe_mode;
  opt.window = c.screen.window;
  if (opt.mode == UniverseMode::Trailing) {
    const auto& d = loaded.panel.dates;
    opt.as_of = c.backtest.start ? *c.backtest.start
                                 : d.at(std::min<std::size_t>(static_cast<std::size_t>(c.screen.window), d.size() - 1));
  }
  return subset_panel(loaded.panel, select_universe(loaded.panel, m.universe, opt));
}

struct Markets {
  PricePanel us, cn;
};

Markets load_markets(const RunConfig& c) {
  Markets m{load_market(c, c.us, false), load_market(c, c.cn, false)};
  logger()->info("loaded {} ({} dates x {} tickers) and {} ({} dates x {} tickers)", c.us.market_id,
                 m.us.dates.size(), m.us.tickers.size(), c.cn.market_id, m.cn.dates.size(), m.cn.tickers.size());
  return m;
}

ExperimentContext make_context(const RunConfig& c, const Markets& m) {
  ExperimentContext ctx;
  ctx.us = {&m.us, c.us.session};
  ctx.cn = {&m.cn, c.cn.session};
  ctx.screen = c.screen;
  ctx.backtest = c.backtest;
  if (c.position_cap) {
    ctx.auto_position_cap = false;
    ctx.backtest.position_cap = *c.position_cap;
  }
  ctx.specs = c.models;
  ctx.seed = c.seed;
  ctx.workers = c.workers;
  return ctx;
}

Direction direction_of(const RunConfig& c) { return c.direction == "us_cn" ? Direction::UsToCn : Direction::CnToUs; }

// Creates the run directory and writes manifest.json.
fs::path prepare_run(const std::string& command, const RunConfig& c, const Globals& g) {
  json manifest = make_manifest(command, c, {{"us", resolve(c, c.us.path)}, {"cn", resolve(c, c.cn.path)}});
  manifest["data_dir"] = fs::absolute(c.data_dir).lexically_normal().string();
  const fs::path dir = g.out.empty() ? fs::path("runs") / manifest_hash(manifest) : fs::path(g.out);
  fs::create_directories(dir);
  write_json(manifest, dir / "manifest.json");
  logger()->info("{} -> {}", command, dir.string());
  return dir;
}

int cmd_validate(const Globals& g, const RunFlags& f) {
  auto l = load_config(g);
  std::vector<std::pair<fs::path, const MarketConfig*>> files;
  if (f.files.empty()) {
    files = {{resolve(l.config, l.config.us.path), &l.config.us}, {resolve(l.config, l.config.cn.path), &l.config.cn}};
  } else {
    for (const auto& p : f.files) files.push_back({fs::path(p), nullptr});
  }
  json out = json::array();
  for (const auto& [path, market] : files) {
    const std::string id = market ? market->market_id : path.stem().string();
    auto loaded = load_price_csv(path, id, market ? market->etf : std::string{});
    if (!loaded.rejected_rows.empty()) {
      const auto& r = loaded.rejected_rows.front();
      throw Error(ErrorCode::UnparseableValue,
                  r.message + " (" + std::to_string(loaded.rejected_rows.size()) + " rejected rows)",
                  path.string() + ":" + std::to_string(r.line));
    }
    loaded.panel.validate();
    const auto& p = loaded.panel;
    out.push_back({{"file", path.string()},
                   {"market_id", id},
                   {"dates", p.dates.size()},
                   {"tickers", p.tickers.size()},
                   {"first", p.dates.empty() ? "" : p.dates.front().iso()},
                   {"last", p.dates.empty() ? "" : p.dates.back().iso()}});
  }
  std::cout << json({{"valid", out}}).dump(2) << '\n';
  return 0;
}

int cmd_synth(const Globals& g, const RunFlags& f) {
  auto l = load_config(g);
  auto& c = l.config;
  apply_flags(c, f);
  auto& s = c.synth;
  s.source_market = c.us.market_id;
  s.target_market = c.cn.market_id;
  s.source_etf = c.us.etf;
  s.target_etf = c.cn.etf;
  s.source_session = c.us.session;
  s.target_session = c.cn.session;
  const auto markets = generate(s);
  const fs::path dir = g.out.empty() ? fs::path("synthetic") : fs::path(g.out);
  fs::create_directories(dir);
  write_price_csv(markets.source, dir / "us.csv");
  write_price_csv(markets.target, dir / "cn.csv");
  write_planted_edges(markets.edges, dir / "planted_edges.csv");
  write_planted_edges(markets.within_edges, dir / "planted_within_edges.csv");
  RunConfig quick = c;
  quick.us.path = "us.csv";
  quick.cn.path = "cn.csv";
  json cfg = to_json(quick);
  write_json(cfg, dir / "config.json");
  logger()->info("synthetic markets with {} planted edges -> {}", markets.edges.size(), dir.string());
  return 0;
}

int cmd_graph(const Globals& g, const RunFlags& f) {
  auto l = load_config(g);
  auto& c = l.config;
  apply_flags(c, f);
  const auto m = load_markets(c);
  const auto ctx = make_context(c, m);
  const auto dir = prepare_run("graph", c, g);
  const auto setup = setup_direction(ctx, direction_of(c), c.feature_kind, c.lag);
  const auto& block = setup.plan.blocks.front();
  std::vector<std::size_t> rows;
  if (c.as_of) {
    const Date d = Date::parse(*c.as_of);
    const auto it = std::lower_bound(setup.data.dates.begin(), setup.data.dates.end(), d);
    if (it == setup.data.dates.end() || *it != d)
      throw Error(ErrorCode::PlanError, "as_of is not a target trading date", *c.as_of);
    rows.push_back(static_cast<std::size_t>(it - setup.data.dates.begin()));
  } else {
    const auto span = prediction_span(setup.data, setup.plan, setup.config);
    for (std::size_t u = span.start; u <= span.end; u += static_cast<std::size_t>(setup.config.retrain_every))
      rows.push_back(u);
  }
  std::vector<BipartiteGraph> graphs;
  for (auto u : rows) {
    ScreenDiagnostics diag;
    graphs.push_back(build_graph(block.aligned, setup.data.tickers, setup.data.returns, u, setup.data.dates[u],
                                 block.screen, c.workers, &diag));
    for (const auto& t : diag.skipped_targets)
      logger()->debug("{}: skipped target {}", setup.data.dates[u].iso(), t);
  }
  write_csv(graph_table(graphs), dir / "graph.csv");
  write_csv(in_degree_table(graphs), dir / "in_degree.csv");
  const auto& last = graphs.back();
  write_csv(matrix_table(last.biadjacency(), last.target_tickers, last.source_tickers, "target"),
            dir / "biadjacency_last.csv");
  const Matrix mean = time_average_biadjacency(graphs);
  write_csv(matrix_table(mean, last.target_tickers, last.source_tickers, "target"), dir / "biadjacency_mean.csv");
  const bool forward = direction_of(c) == Direction::UsToCn;
  const auto src_sector = sector_map(forward ? m.us : m.cn);
  const auto tgt_sector = sector_map(forward ? m.cn : m.us);
  std::vector<std::string> ss, ts;
  for (const auto& t : last.source_tickers) ss.push_back(src_sector.at(t));
  for (const auto& t : last.target_tickers) ts.push_back(tgt_sector.at(t));
  write_csv(sector_matrix_table(sector_block_median_abs(mean, ss, ts)), dir / "sector_block.csv");
  logger()->info("{} graphs, {} edges in the last", graphs.size(), last.edge_count());
  return 0;
}

int cmd_backtest(const Globals& g, const RunFlags& f) {
  auto l = load_config(g);
  auto& c = l.config;
  apply_flags(c, f);
  const auto m = load_markets(c);
  const auto ctx = make_context(c, m);
  const auto dir = prepare_run("backtest", c, g);
  const auto report = run_direction(ctx, direction_of(c), c.feature_kind, c.lag);
  write_backtest_report(report, dir);
  logger()->info("backtest finished: {} days, {} rebuilds", report.dates.size(), report.rebuilds.size());
  return 0;
}

CsvTable prefixed(const std::vector<std::pair<std::vector<std::string>, CsvTable>>& parts,
                  const std::vector<std::string>& keys) {
  CsvTable t;
  t.header = keys;
  if (parts.empty()) return t;
  t.header.insert(t.header.end(), parts.front().second.header.begin(), parts.front().second.header.end());
  for (const auto& [prefix, table] : parts)
    for (const auto& row : table.rows) {
      auto r = prefix;
      r.insert(r.end(), row.begin(), row.end());
      t.rows.push_back(std::move(r));
    }
  return t;
}

std::string kind_dir(ReturnKind k) { return std::string(to_string(k)); }

int cmd_experiment(const Globals& g, const RunFlags& f) {
  auto l = load_config(g);
  auto& c = l.config;
  apply_flags(c, f);
  const auto m = load_markets(c);
  const auto ctx = make_context(c, m);
  const auto& e = c.experiment;
  const auto dir = prepare_run("experiment", c, g);
  const auto seeds = e.seeds.empty() ? std::vector<std::uint64_t>{c.seed} : e.seeds;
  const Market tm = e.target_market == "us" ? Market::US : Market::CN;
  const std::vector<ReturnKind> kinds = {ReturnKind::pvCLCL, ReturnKind::OPCL};
  std::vector<std::pair<std::vector<std::string>, CsvTable>> parts;
  auto keep = [&](std::vector<std::string> key, const fs::path& cell, const BacktestReport& r) {
    write_backtest_report(r, dir / "cells" / cell);
    parts.push_back({std::move(key), summary_table(r)});
  };

  switch (e.kind) {
    case ExperimentKind::CROSS_US_CN:
    case ExperimentKind::CROSS_CN_US: {
      const auto d = e.kind == ExperimentKind::CROSS_US_CN ? Direction::UsToCn : Direction::CnToUs;
      for (auto k : kinds) keep({kind_dir(k)}, kind_dir(k), run_direction(ctx, d, k, c.lag));
      write_csv(prefixed(parts, {"feature_kind"}), dir / "summary.csv");
      break;
    }
    case ExperimentKind::BASELINE_NONGRAPH:
    case ExperimentKind::BASELINE_GRAPH_SAME: {
      for (auto k : kinds)
        keep({kind_dir(k)}, kind_dir(k),
             e.kind == ExperimentKind::BASELINE_NONGRAPH ? run_baseline_nongraph(ctx, tm, k)
                                                         : run_baseline_graph_same(ctx, tm, k));
      write_csv(prefixed(parts, {"feature_kind"}), dir / "summary.csv");
      break;
    }
    case ExperimentKind::EDGE_RANDOMIZATION:
    case ExperimentKind::LAG_SWEEP: {
      const bool fr = e.kind == ExperimentKind::EDGE_RANDOMIZATION;
      std::vector<std::string> labels;
      if (fr) for (double v : e.fractions) labels.push_back(format_number(v));
      else for (int v : e.lags) labels.push_back(std::to_string(v));
      const std::string param = fr ? "fraction" : "lag";
      auto observe = [&](std::size_t v, std::size_t s, const BacktestReport& r) {
        keep({labels[v], std::to_string(seeds[s])},
             fs::path(param + "_" + labels[v]) / ("seed_" + std::to_string(seeds[s])), r);
      };
      const auto table =
          fr ? run_edge_randomization(ctx, e.fractions, seeds, observe) : run_lag_sweep(ctx, e.lags, seeds, observe);
      write_csv(sweep_table(table), dir / "sweep.csv");
      write_csv(prefixed(parts, {param, "seed"}), dir / "summary.csv");
      break;
    }
    case ExperimentKind::HYPERPARAM_GRID: {
      const auto grid = run_hyperparam_grid(ctx, e.grid_span_days);
      write_csv(grid_table(grid, c.backtest.quantile_fractions), dir / "grid.csv");
      break;
    }
    case ExperimentKind::SHOCK_CONDITIONAL: {
      const auto d = direction_of(c);
      const auto r = run_direction(ctx, d, c.feature_kind, c.lag);
      keep({}, "base", r);
      const bool forward = d == Direction::UsToCn;
      const auto& src = forward ? m.us : m.cn;
      const auto etf = column_series(compute_returns(src, ReturnKind::pvCLCL), src.etf_ticker);
      const auto shock = run_shock_conditional(r, etf, forward ? c.us.session : c.cn.session,
                                               forward ? c.cn.session : c.us.session,
                                               c.lag.value_or(direction_lag(d)), e.shock_fractions);
      write_csv(shock_table(shock), dir / "shock.csv");
      write_csv(prefixed(parts, {}), dir / "summary.csv");
      break;
    }
    case ExperimentKind::SECTOR_BREAKDOWN: {
      const auto d = direction_of(c);
      const auto r = run_direction(ctx, d, c.feature_kind, c.lag);
      keep({}, "base", r);
      const auto sectors = run_sector_breakdown(r, sector_map(d == Direction::UsToCn ? m.cn : m.us));
      write_csv(sector_table(sectors, c.backtest.quantile_fractions), dir / "sectors.csv");
      write_csv(prefixed(parts, {}), dir / "summary.csv");
      break;
    }
    case ExperimentKind::COMBINED_PREDICTORS: {
      for (const auto& run : run_combined_predictors(ctx, {{ReturnKind::pvCLCL, ReturnKind::pvCLCL},
                                                           {ReturnKind::pvCLCL, ReturnKind::OPCL},
                                                           {ReturnKind::OPCL, ReturnKind::pvCLCL},
                                                           {ReturnKind::OPCL, ReturnKind::OPCL}},
                                                     e.cn_tau))
        keep({kind_dir(run.us_kind), kind_dir(run.cn_kind)}, kind_dir(run.us_kind) + "_" + kind_dir(run.cn_kind),
             run.report);
      write_csv(prefixed(parts, {"us_kind", "cn_kind"}), dir / "summary.csv");
      break;
    }
  }
  logger()->info("experiment {} finished", to_string(e.kind));
  return 0;
}

int cmd_report(const Globals&, const RunFlags& f) {
  const fs::path root(f.run_dir);
  if (!fs::is_directory(root)) throw Error(ErrorCode::PlanError, "run directory not found", f.run_dir);
  std::vector<fs::path> summaries;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "summary.csv" &&
        fs::is_directory(entry.path().parent_path() / "pnl"))
      summaries.push_back(entry.path());
  std::sort(summaries.begin(), summaries.end());
  if (summaries.empty()) throw Error(ErrorCode::PlanError, "no backtest reports under the run directory", f.run_dir);
  for (const auto& path : summaries) {
    const auto base = path.parent_path();
    const auto summary = read_csv(path);
    const auto heat = sharpe_heatmap(summary);
    write_csv(heat, base / "report" / "sr_heatmap.csv");
    // wide cumulative PnL per quantile: date x model
    std::vector<std::string> models(heat.rows.size());
    for (std::size_t i = 0; i < heat.rows.size(); ++i) models[i] = heat.rows[i][0];
    for (std::size_t q = 1; q < heat.header.size(); ++q) {
      CsvTable wide;
      wide.header = {"date"};
      for (std::size_t i = 0; i < models.size(); ++i) {
        const auto pnl = read_csv(base / "pnl" / (models[i] + "_" + heat.header[q] + ".csv"));
        wide.header.push_back(models[i]);
        if (i == 0)
          for (const auto& r : pnl.rows) wide.rows.push_back({r[pnl.column("date")]});
        if (pnl.rows.size() != wide.rows.size())
          throw Error(ErrorCode::DateMismatch, "pnl files cover different dates", base.string());
        for (std::size_t d = 0; d < pnl.rows.size(); ++d) wide.rows[d].push_back(pnl.rows[d][pnl.column("cum_pnl")]);
      }
      write_csv(wide, base / "report" / ("cum_pnl_" + heat.header[q] + ".csv"));
    }
    std::cout << fs::relative(base, root).string() << '\n';
    for (const auto& h : heat.header) std::cout << (h.empty() ? "model" : h) << '\t';
    std::cout << '\n';
    for (const auto& r : heat.rows) {
      for (const auto& v : r) std::cout << v << '\t';
      std::cout << '\n';
    }
  }
  return 0;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Cross-market graph screening, forecasting and backtests"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  RunFlags f;
  app.add_option("--config", g.config, "JSON config file or run manifest");
  app.add_option("--seed", g.seed, "Root seed");
  app.add_option("--workers", g.workers, "Worker threads (results do not depend on it)");
  app.add_option("--out", g.out, "Output directory (default runs/<hash>)");
  app.add_option("--data-dir", g.data_dir, "Directory for relative data paths (default $XMKT_DATA_DIR)");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off");

  auto* validate = app.add_subcommand("validate", "Check price CSVs against the data contract");
  validate->add_option("files", f.files, "Price CSVs (default: the configured markets)");

  auto add_run = [&](CLI::App* s) {
    s->add_option("--direction", f.direction, "us_cn or cn_us");
    s->add_option("--feature-kind", f.feature_kind, "pvCLCL or OPCL");
    s->add_option("--lag", f.lag, "Source trading-day lag");
    s->add_option("--tau", f.tau, "Screening |t| threshold");
    s->add_option("--window", f.window, "Look-back window in trading days");
    s->add_option("--span-days", f.span_days, "Truncate the prediction span");
    s->add_option("--models", f.models, "Comma-separated methods (default: all eight)");
  };
  auto* synth = app.add_subcommand("synth", "Generate two synthetic markets with planted edges");
  synth->add_option("--n-source", f.n_source);
  synth->add_option("--n-target", f.n_target);
  synth->add_option("--n-dates", f.n_dates);
  synth->add_option("--density", f.density);
  synth->add_option("--noise", f.noise);
  synth->add_option("--true-lag", f.true_lag);
  synth->add_option("--sector-count", f.sector_count);
  synth->add_option("--shock-coupling", f.shock_coupling);
  auto* graph = app.add_subcommand("graph", "Build rolling graphs and export analytics");
  add_run(graph);
  graph->add_option("--as-of", f.as_of, "Single as-of date (YYYY-MM-DD)");
  auto* backtest = app.add_subcommand("backtest", "Run a cross-market backtest");
  add_run(backtest);
  auto* experiment = app.add_subcommand("experiment", "Run an experiment plan");
  add_run(experiment);
  experiment->add_option("--kind", f.kind, "Experiment kind, e.g. edge_randomization");
  experiment->add_option("--fractions", f.fractions, "Edge-randomization fractions")->delimiter(',');
  experiment->add_option("--lags", f.lags, "Lags for the lag sweep")->delimiter(',');
  experiment->add_option("--seeds", f.seeds, "Seeds per sweep cell")->delimiter(',');
  experiment->add_option("--target-market", f.target_market, "us or cn (baselines)");
  experiment->add_option("--grid-span-days", f.grid_span_days, "Prediction span of grid cells (0: full)");
  experiment->add_option("--cn-tau", f.cn_tau, "Threshold of the CN block (combined predictors)");
  auto* report = app.add_subcommand("report", "Plot-ready tables from a run directory");
  report->add_option("--run", f.run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("ConfigError", "ConfigError", e.what(), "command line");
  }

  try {
    logger()->set_level(spdlog::level::from_str(g.log_level));
    if (*validate) return cmd_validate(g, f);
    if (*synth) return cmd_synth(g, f);
    if (*graph) return cmd_graph(g, f);
    if (*backtest) return cmd_backtest(g, f);
    if (*experiment) return cmd_experiment(g, f);
    if (*report) return cmd_report(g, f);
  } catch (const Error& e) {
    return report_error(category(e.code()), std::string(to_string(e.code())), e.what(), e.location());
  } catch (const fs::filesystem_error& e) {
    return report_error("DataError", "IoError", e.what(), e.path1().string());
  } catch (const std::exception& e) {
    return report_error("InternalError", "InternalError", e.what(), "");
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> all = {"xmkt"};
  all.insert(all.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : all) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace xmkt::cli

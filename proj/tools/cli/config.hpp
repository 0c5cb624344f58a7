#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "xmkt/backtest.hpp"
#include "xmkt/experiments.hpp"
#include "xmkt/market_data.hpp"
#include "xmkt/screening.hpp"
#include "xmkt/synthetic.hpp"

namespace xmkt::cli {

using nlohmann::json;

struct MarketConfig {
  std::string path;          // price CSV, relative to the data directory
  std::string market_id;
  std::string etf;
  Session session;
  std::size_t universe = 0;  // top-n by mean market cap; 0 keeps every ticker
};

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::CROSS_US_CN;
  std::vector<double> fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<int> lags = {2, 3, 4, 5};
  std::vector<std::uint64_t> seeds;  // empty: the run seed
  int grid_span_days = 250;          // 0: full span
  std::vector<double> shock_fractions = {1.0, 0.8, 0.6, 0.4, 0.2, 0.1};
  std::string target_market = "cn";  // baselines
  std::optional<double> cn_tau;      // combined predictors
};

struct RunConfig {
  MarketConfig us{"us.csv", "US", "SPY", kUsSession, 0};
  MarketConfig cn{"cn.csv", "CN", "513500.SH", kCnSession, 0};
  UniverseMode universe_mode = UniverseMode::FullSample;
  ScreenConfig screen;
  BacktestConfig backtest;
  std::optional<double> position_cap;  // unset: per target market
  std::vector<ModelSpec> models = default_model_specs();
  std::string direction = "us_cn";
  ReturnKind feature_kind = ReturnKind::pvCLCL;
  std::optional<int> lag;
  std::optional<std::string> as_of;  // graph: one date instead of the rebuild schedule
  ExperimentPlan experiment;
  PlantedSpec synth;
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path data_dir;  // resolved; not part of the manifest
};

json to_json(const RunConfig& c);
/// Missing keys keep defaults; unknown keys raise ConfigError.
void merge_json(RunConfig& c, const json& j);

json to_json(const ModelSpec& s);
ModelSpec model_from_json(const json& j);
json to_json(const PlantedSpec& s);
void merge_json(PlantedSpec& s, const json& j);

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

/// Manifest: command, resolved config and input hashes. Its hash names the
/// run directory.
json make_manifest(const std::string& command, const RunConfig& c,
                   const std::vector<std::pair<std::string, std::filesystem::path>>& inputs);
std::string manifest_hash(const json& manifest);

/// Writes `j` with a trailing newline, 2-space indent.
void write_json(const json& j, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

}  // namespace xmkt::cli

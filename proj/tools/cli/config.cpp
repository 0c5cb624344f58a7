#include "cli/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "xmkt/error.hpp"

namespace xmkt::cli {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ConfigError, what, where);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) bad(where + "." + k, "unknown key");
}

template <class T>
void get(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "wrong value type");
  }
}

template <class T>
void get_opt(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  get(j, key, v, where);
  out = v;
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json session_json(Session s) { return json::array({s.open_utc_min, s.close_utc_min}); }

Session session_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where, "session must be [open_utc_min, close_utc_min]");
  return {j[0].get<int>(), j[1].get<int>()};
}

json market_json(const MarketConfig& m) {
  return {{"path", m.path},
          {"market_id", m.market_id},
          {"etf", m.etf},
          {"session", session_json(m.session)},
          {"universe", m.universe}};
}

void merge_market(MarketConfig& m, const json& j, const std::string& where) {
  only_keys(j, where, {"path", "market_id", "etf", "session", "universe"});
  get(j, "path", m.path, where);
  get(j, "market_id", m.market_id, where);
  get(j, "etf", m.etf, where);
  get(j, "universe", m.universe, where);
  if (j.contains("session")) m.session = session_from(j["session"], where + ".session");
}

std::string kind_name(ReturnKind k) { return std::string(to_string(k)); }

ReturnKind kind_from(const json& j, const std::string& where) {
  try {
    return parse_return_kind(j.get<std::string>());
  } catch (const std::exception&) {
    bad(where, "expected pvCLCL or OPCL");
  }
}

std::optional<Date> date_opt(const json& j, const char* key, std::optional<Date> cur, const std::string& where) {
  if (!j.contains(key)) return cur;
  if (j[key].is_null()) return std::nullopt;
  try {
    return Date::parse(j[key].get<std::string>());
  } catch (const std::exception&) {
    bad(where + "." + key, "expected YYYY-MM-DD");
  }
}

json date_json(const std::optional<Date>& d) { return d ? json(d->iso()) : json(nullptr); }

}  // namespace

json to_json(const ModelSpec& s) {
  const auto& h = s.hp;
  json j = {{"method", std::string(to_string(s.method))},
            {"lambda", h.lambda},
            {"C", h.C},
            {"epsilon", h.epsilon},
            {"rbf_gamma", opt(h.rbf_gamma)},
            {"svr_tol", h.svr_tol},
            {"svr_max_iter", h.svr_max_iter},
            {"max_depth", h.max_depth},
            {"learning_rate", h.learning_rate},
            {"n_estimators", h.n_estimators},
            {"num_leaves", h.num_leaves},
            {"min_samples_leaf", h.min_samples_leaf},
            {"split_gamma", h.split_gamma},
            {"leaf_l2", h.leaf_l2},
            {"min_child_weight", h.min_child_weight},
            {"max_features", h.max_features},
            {"max_bins", h.max_bins},
            {"allow_override", s.allow_override}};
  return j;
}

ModelSpec model_from_json(const json& j) {
  const std::string where = "models[]";
  if (j.is_string()) return ModelSpec::defaults(parse_method(j.get<std::string>()));
  only_keys(j, where,
            {"method", "lambda", "C", "epsilon", "rbf_gamma", "svr_tol", "svr_max_iter", "max_depth", "learning_rate",
             "n_estimators", "num_leaves", "min_samples_leaf", "split_gamma", "leaf_l2", "min_child_weight",
             "max_features", "max_bins", "allow_override"});
  if (!j.contains("method")) bad(where, "model needs a method");
  ModelSpec s;
  try {
    s = ModelSpec::defaults(parse_method(j["method"].get<std::string>()));
  } catch (const Error& e) {
    bad(where + ".method", e.what());
  }
  auto& h = s.hp;
  get(j, "lambda", h.lambda, where);
  get(j, "C", h.C, where);
  get(j, "epsilon", h.epsilon, where);
  get_opt(j, "rbf_gamma", h.rbf_gamma, where);
  get(j, "svr_tol", h.svr_tol, where);
  get(j, "svr_max_iter", h.svr_max_iter, where);
  get(j, "max_depth", h.max_depth, where);
  get(j, "learning_rate", h.learning_rate, where);
  get(j, "n_estimators", h.n_estimators, where);
  get(j, "num_leaves", h.num_leaves, where);
  get(j, "min_samples_leaf", h.min_samples_leaf, where);
  get(j, "split_gamma", h.split_gamma, where);
  get(j, "leaf_l2", h.leaf_l2, where);
  get(j, "min_child_weight", h.min_child_weight, where);
  get(j, "max_features", h.max_features, where);
  get(j, "max_bins", h.max_bins, where);
  get(j, "allow_override", s.allow_override, where);
  return s;
}

json to_json(const PlantedSpec& s) {
  return {{"n_source", s.n_source},
          {"n_target", s.n_target},
          {"n_dates", s.n_dates},
          {"edge_density", s.edge_density},
          {"beta_min", s.beta_min},
          {"beta_max", s.beta_max},
          {"noise_sigma", s.noise_sigma},
          {"source_sigma", s.source_sigma},
          {"gap_share", s.gap_share},
          {"target_gap_sigma", s.target_gap_sigma},
          {"true_lag", s.true_lag},
          {"sector_count", s.sector_count},
          {"shock_coupling", s.shock_coupling},
          {"market_sigma", s.market_sigma},
          {"holiday_rate", s.holiday_rate},
          {"within_density", s.within_density},
          {"within_beta", s.within_beta},
          {"ar_coefficient", s.ar_coefficient},
          {"start", s.start.iso()}};
}

void merge_json(PlantedSpec& s, const json& j) {
  const std::string w = "synth";
  only_keys(j, w,
            {"n_source", "n_target", "n_dates", "edge_density", "beta_min", "beta_max", "noise_sigma", "source_sigma",
             "gap_share", "target_gap_sigma", "true_lag", "sector_count", "shock_coupling", "market_sigma",
             "holiday_rate", "within_density", "within_beta", "ar_coefficient", "start"});
  get(j, "n_source", s.n_source, w);
  get(j, "n_target", s.n_target, w);
  get(j, "n_dates", s.n_dates, w);
  get(j, "edge_density", s.edge_density, w);
  get(j, "beta_min", s.beta_min, w);
  get(j, "beta_max", s.beta_max, w);
  get(j, "noise_sigma", s.noise_sigma, w);
  get(j, "source_sigma", s.source_sigma, w);
  get(j, "gap_share", s.gap_share, w);
  get(j, "target_gap_sigma", s.target_gap_sigma, w);
  get(j, "true_lag", s.true_lag, w);
  get(j, "sector_count", s.sector_count, w);
  get(j, "shock_coupling", s.shock_coupling, w);
  get(j, "market_sigma", s.market_sigma, w);
  get(j, "holiday_rate", s.holiday_rate, w);
  get(j, "within_density", s.within_density, w);
  get(j, "within_beta", s.within_beta, w);
  get(j, "ar_coefficient", s.ar_coefficient, w);
  if (auto d = date_opt(j, "start", s.start, w)) s.start = *d;
}

json to_json(const RunConfig& c) {
  const auto& sc = c.screen;
  const auto& b = c.backtest;
  const auto& e = c.experiment;
  json models = json::array();
  for (const auto& m : c.models) models.push_back(to_json(m));
  return {
      {"us", market_json(c.us)},
      {"cn", market_json(c.cn)},
      {"universe_mode", c.universe_mode == UniverseMode::FullSample ? "full_sample" : "trailing"},
      {"screen",
       {{"window", sc.window},
        {"tau", sc.tau},
        {"max_predictors", opt(sc.max_predictors)},
        {"bh_fdr", opt(sc.bh_fdr)},
        {"allow_self_edges", sc.allow_self_edges},
        {"winsorize", sc.winsorize}}},
      {"backtest",
       {{"retrain_every", b.retrain_every},
        {"quantile_fractions", b.quantile_fractions},
        {"position_cap", opt(c.position_cap)},
        {"bps_of_mdv", b.bps_of_mdv},
        {"start", date_json(b.start)},
        {"end", date_json(b.end)},
        {"span_days", opt(b.span_days)},
        {"winsorize_training", b.winsorize_training}}},
      {"models", models},
      {"direction", c.direction},
      {"feature_kind", kind_name(c.feature_kind)},
      {"lag", opt(c.lag)},
      {"as_of", opt(c.as_of)},
      {"experiment",
       {{"kind", std::string(to_string(e.kind))},
        {"fractions", e.fractions},
        {"lags", e.lags},
        {"seeds", e.seeds},
        {"grid_span_days", e.grid_span_days},
        {"shock_fractions", e.shock_fractions},
        {"target_market", e.target_market},
        {"cn_tau", opt(e.cn_tau)}}},
      {"synth", to_json(c.synth)},
      {"seed", c.seed},
  };
}

void merge_json(RunConfig& c, const json& j) {
  only_keys(j, "config",
            {"us", "cn", "universe_mode", "screen", "backtest", "models", "direction", "feature_kind", "lag", "as_of",
             "experiment", "synth", "seed", "workers"});
  if (j.contains("us")) merge_market(c.us, j["us"], "us");
  if (j.contains("cn")) merge_market(c.cn, j["cn"], "cn");
  if (j.contains("universe_mode")) {
    const auto m = j["universe_mode"].get<std::string>();
    if (m == "full_sample") c.universe_mode = UniverseMode::FullSample;
    else if (m == "trailing") c.universe_mode = UniverseMode::Trailing;
    else bad("universe_mode", "expected full_sample or trailing");
  }
  if (j.contains("screen")) {
    const auto& s = j["screen"];
    only_keys(s, "screen", {"window", "tau", "max_predictors", "bh_fdr", "allow_self_edges", "winsorize"});
    get(s, "window", c.screen.window, "screen");
    get(s, "tau", c.screen.tau, "screen");
    get_opt(s, "max_predictors", c.screen.max_predictors, "screen");
    get_opt(s, "bh_fdr", c.screen.bh_fdr, "screen");
    get(s, "allow_self_edges", c.screen.allow_self_edges, "screen");
    get(s, "winsorize", c.screen.winsorize, "screen");
  }
  c.backtest.window = c.screen.window;
  if (j.contains("backtest")) {
    const auto& b = j["backtest"];
    only_keys(b, "backtest",
              {"retrain_every", "quantile_fractions", "position_cap", "bps_of_mdv", "start", "end", "span_days",
               "winsorize_training"});
    get(b, "retrain_every", c.backtest.retrain_every, "backtest");
    get(b, "quantile_fractions", c.backtest.quantile_fractions, "backtest");
    get_opt(b, "position_cap", c.position_cap, "backtest");
    get(b, "bps_of_mdv", c.backtest.bps_of_mdv, "backtest");
    c.backtest.start = date_opt(b, "start", c.backtest.start, "backtest");
    c.backtest.end = date_opt(b, "end", c.backtest.end, "backtest");
    get_opt(b, "span_days", c.backtest.span_days, "backtest");
    get(b, "winsorize_training", c.backtest.winsorize_training, "backtest");
  }
  if (j.contains("models")) {
    if (!j["models"].is_array() || j["models"].empty()) bad("models", "expected a non-empty list");
    c.models.clear();
    for (const auto& m : j["models"]) c.models.push_back(model_from_json(m));
  }
  get(j, "direction", c.direction, "config");
  if (c.direction != "us_cn" && c.direction != "cn_us") bad("direction", "expected us_cn or cn_us");
  if (j.contains("feature_kind")) c.feature_kind = kind_from(j["feature_kind"], "feature_kind");
  get_opt(j, "lag", c.lag, "config");
  get_opt(j, "as_of", c.as_of, "config");
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    only_keys(e, "experiment",
              {"kind", "fractions", "lags", "seeds", "grid_span_days", "shock_fractions", "target_market", "cn_tau"});
    if (e.contains("kind")) c.experiment.kind = parse_experiment_kind(e["kind"].get<std::string>());
    get(e, "fractions", c.experiment.fractions, "experiment");
    get(e, "lags", c.experiment.lags, "experiment");
    get(e, "seeds", c.experiment.seeds, "experiment");
    get(e, "grid_span_days", c.experiment.grid_span_days, "experiment");
    get(e, "shock_fractions", c.experiment.shock_fractions, "experiment");
    get(e, "target_market", c.experiment.target_market, "experiment");
    get_opt(e, "cn_tau", c.experiment.cn_tau, "experiment");
    if (c.experiment.target_market != "us" && c.experiment.target_market != "cn")
      bad("experiment.target_market", "expected us or cn");
  }
  if (j.contains("synth")) merge_json(c.synth, j["synth"]);
  get(j, "seed", c.seed, "config");
  get(j, "workers", c.workers, "config");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open input", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

json make_manifest(const std::string& command, const RunConfig& c,
                   const std::vector<std::pair<std::string, std::filesystem::path>>& inputs) {
  json in = json::object();
  for (const auto& [name, path] : inputs) in[name] = {{"file", path.filename().string()}, {"sha256", file_sha256(path)}};
  return {{"command", command}, {"config", to_json(c)}, {"inputs", in}, {"format", 1}};
}

std::string manifest_hash(const json& manifest) { return sha256_hex(manifest.dump()).substr(0, 16); }

void write_json(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write", path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config", path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, e.what(), path.string());
  }
}

}  // namespace xmkt::cli

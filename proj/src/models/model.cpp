#include <algorithm>
#include <cmath>
#include <ostream>

#include "xmkt/error.hpp"
#include "xmkt/models.hpp"
#include "xmkt/models/ensemble.hpp"
#include "xmkt/models/linear.hpp"
#include "xmkt/models/svr.hpp"
#include "xmkt/stats.hpp"

namespace xmkt {

namespace {

constexpr std::array<std::string_view, 10> kNames = {"OLS",  "LASSO", "RIDGE", "SVR",     "XGB",
                                                     "HGBT", "RF",    "ADABOOST", "ENS_AVG", "ENS_MED"};

void check_range(const char* name, double v, double lo, double hi) {
  if (!(v >= lo && v <= hi))
    throw Error(ErrorCode::InvalidHyperparameter,
                std::string(name) + "=" + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
}

}  // namespace

std::string_view to_string(Method m) noexcept { return kNames[static_cast<std::size_t>(m)]; }

Method parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return static_cast<Method>(i);
  if (name == "LGBM") return Method::HGBT;
  if (name == "SVM") return Method::SVR;
  throw Error(ErrorCode::InvalidHyperparameter, "unknown method '" + std::string(name) + "'");
}

ModelSpec ModelSpec::defaults(Method m) {
  ModelSpec s;
  s.method = m;
  auto& hp = s.hp;
  switch (m) {
    case Method::HGBT:
      hp.max_depth = 0;
      hp.min_samples_leaf = 20;
      hp.leaf_l2 = 0.0;
      hp.min_child_weight = 1e-3;
      break;
    case Method::RF:
      hp.max_depth = 10;
      break;
    case Method::ADABOOST:
      hp.max_depth = 5;
      break;
    default:
      break;
  }
  return s;
}

void ModelSpec::validate() const {
  const auto& h = hp;
  if (!(h.learning_rate > 0) || h.n_estimators < 1 || !(h.C > 0) || !(h.epsilon >= 0) || !(h.lambda >= 0) ||
      h.num_leaves < 2 || h.min_samples_leaf < 1 || h.max_bins < 2 || h.max_bins > 65535 || h.max_features < 0 ||
      (h.rbf_gamma && !(*h.rbf_gamma > 0)))
    throw Error(ErrorCode::InvalidHyperparameter, "hyperparameter outside its mathematical domain");
  if (allow_override) return;
  switch (method) {
    case Method::LASSO:
    case Method::RIDGE:
      check_range("lambda", h.lambda, 1e-4, 1000);
      break;
    case Method::SVR:
      check_range("C", h.C, 0.1, 1000);
      break;
    case Method::XGB:
      check_range("max_depth", h.max_depth, 3, 9);
      check_range("learning_rate", h.learning_rate, 0.01, 0.2);
      check_range("n_estimators", h.n_estimators, 50, 300);
      break;
    case Method::HGBT:
      check_range("num_leaves", h.num_leaves, 10, 90);
      check_range("learning_rate", h.learning_rate, 0.01, 0.2);
      check_range("n_estimators", h.n_estimators, 50, 300);
      break;
    case Method::RF:
      check_range("n_estimators", h.n_estimators, 50, 300);
      check_range("max_depth", h.max_depth, 5, 50);
      break;
    case Method::ADABOOST:
      check_range("max_depth", h.max_depth, 1, 10);
      check_range("n_estimators", h.n_estimators, 50, 300);
      check_range("learning_rate", h.learning_rate, 0.01, 0.2);
      break;
    default:
      break;
  }
}

std::vector<ModelSpec> hyperparameter_grid(Method m) {
  std::vector<ModelSpec> out;
  const ModelSpec base = ModelSpec::defaults(m);
  const std::vector<double> lrs = {0.01, 0.1, 0.2};
  const std::vector<int> ests = {50, 100, 300};
  switch (m) {
    case Method::LASSO:
    case Method::RIDGE:
      for (double l : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0}) {
        auto s = base;
        s.hp.lambda = l;
        out.push_back(s);
      }
      break;
    case Method::SVR:
      for (double c : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
        auto s = base;
        s.hp.C = c;
        out.push_back(s);
      }
      break;
    case Method::XGB:
    case Method::HGBT:
    case Method::ADABOOST: {
      std::vector<int> first = m == Method::XGB ? std::vector<int>{3, 6, 9}
                               : m == Method::HGBT ? std::vector<int>{10, 31, 90}
                                                   : std::vector<int>{1, 5, 10};
      for (int a : first)
        for (double lr : lrs)
          for (int n : ests) {
            auto s = base;
            (m == Method::HGBT ? s.hp.num_leaves : s.hp.max_depth) = a;
            s.hp.learning_rate = lr;
            s.hp.n_estimators = n;
            out.push_back(s);
          }
      break;
    }
    case Method::RF:
      for (int n : ests)
        for (int d : {5, 10, 50}) {
          auto s = base;
          s.hp.n_estimators = n;
          s.hp.max_depth = d;
          out.push_back(s);
        }
      break;
    default:
      break;
  }
  return out;
}

void TrainSet::validate() const {
  if (X.rows() != y.size())
    throw Error(ErrorCode::DimensionMismatch,
                "X has " + std::to_string(X.rows()) + " rows, y has " + std::to_string(y.size()));
  if (static_cast<std::size_t>(X.cols()) != feature_ids.size())
    throw Error(ErrorCode::DimensionMismatch, "X columns do not match feature_ids");
  if (X.rows() < 3) throw Error(ErrorCode::InsufficientDates, "training set needs at least 3 rows");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::UnparseableValue, "training set has missing values");
}

FittedModel::FittedModel(ModelSpec spec, std::vector<std::string> feature_ids, std::shared_ptr<const Regressor> impl,
                         FitDiagnostics diagnostics)
    : spec_(std::move(spec)),
      feature_ids_(std::move(feature_ids)),
      impl_(std::move(impl)),
      diagnostics_(diagnostics) {}

double FittedModel::predict(std::span<const double> x) const {
  if (x.size() != feature_ids_.size())
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(feature_ids_.size()) +
                                                  " features, got " + std::to_string(x.size()));
  return impl_->predict(x);
}

void FittedModel::dump(std::ostream& out) const {
  const auto& h = spec_.hp;
  out << "method " << to_string(spec_.method) << "\n";
  out << "hyperparameters lambda=" << h.lambda << " C=" << h.C << " epsilon=" << h.epsilon
      << " max_depth=" << h.max_depth << " learning_rate=" << h.learning_rate << " n_estimators=" << h.n_estimators
      << " num_leaves=" << h.num_leaves << " seed=" << h.seed << "\n";
  out << "features";
  for (const auto& f : feature_ids_) out << ' ' << f;
  out << "\nconverged " << (diagnostics_.converged ? 1 : 0) << " iterations " << diagnostics_.iterations << "\n";
  impl_->dump(out);
}

FittedModel fit(const ModelSpec& spec, const TrainSet& train) {
  spec.validate();
  train.validate();
  FitDiagnostics diag;
  std::shared_ptr<const Regressor> impl;
  switch (spec.method) {
    case Method::OLS:
      impl = std::make_shared<models::LinearModel>(models::fit_ols(train));
      break;
    case Method::LASSO:
      impl = std::make_shared<models::LinearModel>(models::fit_lasso(train, spec.hp.lambda, diag));
      break;
    case Method::RIDGE:
      impl = std::make_shared<models::LinearModel>(models::fit_ridge(train, spec.hp.lambda));
      break;
    case Method::SVR: {
      models::SvrParams p{spec.hp.C, spec.hp.epsilon, spec.hp.rbf_gamma, spec.hp.svr_tol, spec.hp.svr_max_iter};
      impl = std::make_shared<models::SvrModel>(models::fit_svr(train, p, diag));
      break;
    }
    case Method::XGB:
      impl = std::make_shared<models::BoostedModel>(models::fit_xgb(train, spec.hp));
      break;
    case Method::HGBT:
      impl = std::make_shared<models::BoostedModel>(models::fit_hgbt(train, spec.hp));
      break;
    case Method::RF:
      impl = std::make_shared<models::ForestModel>(models::fit_rf(train, spec.hp));
      break;
    case Method::ADABOOST:
      impl = std::make_shared<models::AdaBoostModel>(models::fit_adaboost(train, spec.hp));
      break;
    case Method::ENS_AVG:
    case Method::ENS_MED:
      throw Error(ErrorCode::InvalidHyperparameter, "ensembles combine base predictions and are not fitted");
  }
  return FittedModel(spec, train.feature_ids, std::move(impl), diag);
}

double ensemble_predict(std::span<const double> base_predictions, EnsembleMode mode) {
  if (base_predictions.size() != kBaseMethods.size())
    throw Error(ErrorCode::WrongArity,
                "ensemble needs 8 base predictions, got " + std::to_string(base_predictions.size()));
  if (mode == EnsembleMode::Average) return stats::mean(base_predictions);
  return stats::median(base_predictions);
}

}  // namespace xmkt

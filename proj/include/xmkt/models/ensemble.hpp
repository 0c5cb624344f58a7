#pragma once

#include <vector>

#include "xmkt/models.hpp"
#include "xmkt/models/tree.hpp"

namespace xmkt::models {

/// Additive boosting: base + sum of (already learning-rate scaled) trees.
class BoostedModel final : public Regressor {
 public:
  BoostedModel(double base, std::vector<RegressionTree> trees, std::vector<double> train_rss)
      : base_(base), trees_(std::move(trees)), train_rss_(std::move(train_rss)) {}

  double predict(std::span<const double> x) const override;
  void dump(std::ostream& out) const override;

  double base() const { return base_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  /// Training RSS after the base score and after each round.
  const std::vector<double>& train_rss() const { return train_rss_; }

 private:
  double base_;
  std::vector<RegressionTree> trees_;
  std::vector<double> train_rss_;
};

/// Bagged CART trees; predicts their mean.
class ForestModel final : public Regressor {
 public:
  explicit ForestModel(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}

  double predict(std::span<const double> x) const override;
  void dump(std::ostream& out) const override;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

/// AdaBoost.R2; predicts the weighted median of the estimators.
class AdaBoostModel final : public Regressor {
 public:
  AdaBoostModel(std::vector<RegressionTree> trees, std::vector<double> weights)
      : trees_(std::move(trees)), weights_(std::move(weights)) {}

  double predict(std::span<const double> x) const override;
  void dump(std::ostream& out) const override;
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<RegressionTree> trees_;
  std::vector<double> weights_;
};

BoostedModel fit_xgb(const TrainSet& train, const Hyperparameters& hp);
BoostedModel fit_hgbt(const TrainSet& train, const Hyperparameters& hp);
ForestModel fit_rf(const TrainSet& train, const Hyperparameters& hp);
AdaBoostModel fit_adaboost(const TrainSet& train, const Hyperparameters& hp);

}  // namespace xmkt::models

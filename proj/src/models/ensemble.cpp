#include "xmkt/models/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "xmkt/rng.hpp"

namespace xmkt::models {

namespace {

std::vector<int> all_rows(Eigen::Index d) {
  std::vector<int> r(static_cast<std::size_t>(d));
  std::iota(r.begin(), r.end(), 0);
  return r;
}

double rss(const Eigen::VectorXd& y, const std::vector<double>& pred) {
  double s = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) s += (y(i) - pred[i]) * (y(i) - pred[i]);
  return s;
}

template <class Grow>
BoostedModel boost(const TrainSet& train, const Hyperparameters& hp, Grow grow) {
  const Eigen::Index d = train.y.size();
  const double base = train.y.mean();
  std::vector<double> pred(d, base), g(d), h(d, 1.0);
  std::vector<RegressionTree> trees;
  std::vector<double> losses{rss(train.y, pred)};
  trees.reserve(hp.n_estimators);
  for (int m = 0; m < hp.n_estimators; ++m) {
    for (Eigen::Index i = 0; i < d; ++i) g[i] = pred[i] - train.y(i);
    RegressionTree tree = grow(g, h);
    tree.scale_leaves(hp.learning_rate);
    for (Eigen::Index i = 0; i < d; ++i) pred[i] += tree.predict_row(train.X, i);
    losses.push_back(rss(train.y, pred));
    trees.push_back(std::move(tree));
  }
  return BoostedModel(base, std::move(trees), std::move(losses));
}

}  // namespace

double BoostedModel::predict(std::span<const double> x) const {
  double acc = base_;
  for (const auto& t : trees_) acc += t.predict(x);
  return acc;
}

void BoostedModel::dump(std::ostream& out) const {
  out << "base " << base_ << "\n";
  for (const auto& t : trees_) t.dump(out);
}

double ForestModel::predict(std::span<const double> x) const {
  double acc = 0;
  for (const auto& t : trees_) acc += t.predict(x);
  return trees_.empty() ? 0.0 : acc / static_cast<double>(trees_.size());
}

void ForestModel::dump(std::ostream& out) const {
  for (const auto& t : trees_) t.dump(out);
}

double AdaBoostModel::predict(std::span<const double> x) const {
  const std::size_t m = trees_.size();
  std::vector<std::pair<double, double>> pw(m);
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    pw[i] = {trees_[i].predict(x), weights_[i]};
    total += weights_[i];
  }
  std::sort(pw.begin(), pw.end());
  double cum = 0;
  for (const auto& [p, w] : pw) {
    cum += w;
    if (cum >= 0.5 * total) return p;
  }
  return pw.empty() ? 0.0 : pw.back().first;
}

void AdaBoostModel::dump(std::ostream& out) const {
  for (std::size_t i = 0; i < trees_.size(); ++i) {
    out << "weight " << weights_[i] << "\n";
    trees_[i].dump(out);
  }
}

BoostedModel fit_xgb(const TrainSet& train, const Hyperparameters& hp) {
  const auto rows = all_rows(train.y.size());
  TreeParams p;
  p.max_depth = hp.max_depth;
  p.lambda = hp.leaf_l2;
  p.gamma = hp.split_gamma;
  p.min_child_weight = hp.min_child_weight;
  const auto sorted = SortedColumns::build(train.X);
  return boost(train, hp, [&](const std::vector<double>& g, const std::vector<double>& h) {
    return grow_exact_tree(train.X, rows, g, h, p, nullptr, &sorted);
  });
}

BoostedModel fit_hgbt(const TrainSet& train, const Hyperparameters& hp) {
  const auto binned = BinnedFeatures::build(train.X, hp.max_bins);
  TreeParams p;
  p.max_depth = hp.max_depth;
  p.lambda = hp.leaf_l2;
  p.gamma = hp.split_gamma;
  p.min_child_weight = hp.min_child_weight;
  p.min_samples_leaf = hp.min_samples_leaf;
  p.num_leaves = hp.num_leaves;
  return boost(train, hp, [&](const std::vector<double>& g, const std::vector<double>& h) {
    return grow_leafwise_tree(binned, g, h, p);
  });
}

ForestModel fit_rf(const TrainSet& train, const Hyperparameters& hp) {
  const int d = static_cast<int>(train.y.size());
  const int nf = static_cast<int>(train.X.cols());
  TreeParams p;
  p.max_depth = hp.max_depth;
  p.max_features = hp.max_features > 0 ? hp.max_features : std::max(1, nf / 3);
  const auto sorted = SortedColumns::build(train.X);
  std::vector<RegressionTree> trees;
  trees.reserve(hp.n_estimators);
  std::vector<int> rows(d);
  std::vector<double> g(d), h(d, 1.0);
  for (int b = 0; b < hp.n_estimators; ++b) {
    auto eng = rng::engine(hp.seed, "rf", {static_cast<std::uint64_t>(b)});
    std::uniform_int_distribution<int> pick(0, d - 1);
    for (int i = 0; i < d; ++i) {
      rows[i] = pick(eng);
      g[i] = -train.y(rows[i]);
    }
    trees.push_back(grow_exact_tree(train.X, rows, g, h, p, &eng, &sorted));
  }
  return ForestModel(std::move(trees));
}

AdaBoostModel fit_adaboost(const TrainSet& train, const Hyperparameters& hp) {
  const int d = static_cast<int>(train.y.size());
  TreeParams p;
  p.max_depth = hp.max_depth;
  std::vector<double> w(d, 1.0 / d), cdf(d), err(d), g(d), h(d, 1.0);
  std::vector<int> rows(d);
  const auto sorted = SortedColumns::build(train.X);
  std::vector<RegressionTree> trees;
  std::vector<double> weights;
  for (int m = 0; m < hp.n_estimators; ++m) {
    auto eng = rng::engine(hp.seed, "adaboost", {static_cast<std::uint64_t>(m)});
    std::partial_sum(w.begin(), w.end(), cdf.begin());
    std::uniform_real_distribution<double> u(0.0, cdf.back());
    for (int i = 0; i < d; ++i) {
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u(eng));
      rows[i] = std::min(d - 1, static_cast<int>(it - cdf.begin()));
      g[i] = -train.y(rows[i]);
    }
    RegressionTree tree = grow_exact_tree(train.X, rows, g, h, p, nullptr, &sorted);
    double emax = 0;
    for (int i = 0; i < d; ++i) {
      err[i] = std::abs(tree.predict_row(train.X, i) - train.y(i));
      emax = std::max(emax, err[i]);
    }
    if (emax > 0)
      for (auto& e : err) e /= emax;
    double avg = 0;
    for (int i = 0; i < d; ++i) avg += w[i] * err[i];
    if (avg <= 0) {
      trees.push_back(std::move(tree));
      weights.push_back(1.0);
      break;
    }
    if (avg >= 0.5) {
      if (trees.empty()) {
        trees.push_back(std::move(tree));
        weights.push_back(1.0);
      }
      break;
    }
    const double beta = avg / (1.0 - avg);
    trees.push_back(std::move(tree));
    weights.push_back(hp.learning_rate * std::log(1.0 / beta));
    if (m + 1 == hp.n_estimators) break;
    double total = 0;
    for (int i = 0; i < d; ++i) {
      w[i] *= std::pow(beta, (1.0 - err[i]) * hp.learning_rate);
      total += w[i];
    }
    if (!(total > 0)) break;
    for (auto& wi : w) wi /= total;
  }
  return AdaBoostModel(std::move(trees), std::move(weights));
}

}  // namespace xmkt::models

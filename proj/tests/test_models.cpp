#include "xmkt/models.hpp"

#include <gtest/gtest.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "xmkt/error.hpp"
#include "xmkt/models/ensemble.hpp"
#include "xmkt/models/linear.hpp"
#include "xmkt/models/svr.hpp"
#include "xmkt/models/tree.hpp"

namespace xmkt {
namespace {

using models::Objective;

TrainSet random_train(int d, int n, std::uint64_t seed, double noise = 0.5) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> N;
  TrainSet t;
  t.X.resize(d, n);
  t.y.resize(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) t.X(i, j) = N(eng) * (1.0 + j);
  for (int i = 0; i < d; ++i) {
    double v = 0.3;
    for (int j = 0; j < n; ++j) v += (j % 2 ? -0.4 : 0.7) * t.X(i, j) / (1.0 + j);
    t.y(i) = v + noise * N(eng);
  }
  for (int j = 0; j < n; ++j) t.feature_ids.push_back("f" + std::to_string(j));
  return t;
}

std::vector<double> row(const Eigen::MatrixXd& X, Eigen::Index i) {
  std::vector<double> r(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index j = 0; j < X.cols(); ++j) r[j] = X(i, j);
  return r;
}

TEST(Ols, ExactLine) {
  TrainSet t;
  t.X.resize(5, 1);
  t.y.resize(5);
  for (int i = 0; i < 5; ++i) {
    t.X(i, 0) = i;
    t.y(i) = 2.0 * i + 1.0;
  }
  t.feature_ids = {"x"};
  const auto m = fit(ModelSpec::defaults(Method::OLS), t);
  const double x = 3.0;
  EXPECT_NEAR(m.predict(std::span<const double>(&x, 1)), 7.0, 1e-12);
}

TEST(Ols, MatchesQrAndIsOrthogonal) {
  const auto t = random_train(120, 6, 1);
  const auto lm = models::fit_ols(t);
  Eigen::MatrixXd A(120, 7);
  A.col(0).setOnes();
  A.rightCols(6) = t.X;
  const Eigen::VectorXd b = A.householderQr().solve(t.y);
  EXPECT_NEAR(lm.raw_intercept(), b(0), 1e-10);
  EXPECT_LE((lm.raw_coefficients() - b.tail(6)).cwiseAbs().maxCoeff(), 1e-10);

  Eigen::VectorXd pred(120);
  for (int i = 0; i < 120; ++i) pred(i) = lm.predict(row(t.X, i));
  const Eigen::VectorXd r = t.y - pred;
  EXPECT_NEAR(pred.mean(), t.y.mean(), 1e-12);
  EXPECT_LE((t.X.transpose() * r).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Ols, RankDeficientIsFinite) {
  auto t = random_train(50, 3, 2);
  t.X.col(2) = 2.0 * t.X.col(0);
  const auto m = fit(ModelSpec::defaults(Method::OLS), t);
  EXPECT_TRUE(std::isfinite(m.predict(row(t.X, 0))));
}

TEST(Ridge, ClosedFormViaAugmentedQr) {
  const auto t = random_train(80, 5, 3);
  for (double lambda : {1e-3, 0.1, 10.0, 1000.0}) {
    const auto lm = models::fit_ridge(t, lambda);
    const auto s = models::Standardizer::fit(t.X);
    const Eigen::MatrixXd Z = s.apply(t.X);
    Eigen::MatrixXd A(85, 5);
    A.topRows(80) = Z;
    A.bottomRows(5) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(85);
    b.head(80) = t.y.array() - t.y.mean();
    const Eigen::VectorXd w = A.colPivHouseholderQr().solve(b);
    EXPECT_LE((lm.coef() - w).cwiseAbs().maxCoeff(), 1e-10 * (1 + w.cwiseAbs().maxCoeff()));
    EXPECT_NEAR(lm.intercept(), t.y.mean(), 1e-14);
  }
}

TEST(Ridge, ZeroPenaltyEqualsOls) {
  const auto t = random_train(60, 4, 4);
  const auto a = models::fit_ridge(t, 0.0);
  const auto b = models::fit_ols(t);
  for (int i = 0; i < 60; ++i) EXPECT_NEAR(a.predict(row(t.X, i)), b.predict(row(t.X, i)), 1e-10);
}

TEST(Lasso, SatisfiesKkt) {
  const auto t = random_train(150, 8, 5);
  for (double lambda : {1e-3, 0.01, 0.1}) {
    FitDiagnostics d;
    const auto lm = models::fit_lasso(t, lambda, d);
    EXPECT_TRUE(d.converged);
    const Eigen::MatrixXd Z = lm.standardizer().apply(t.X);
    EXPECT_LE(models::lasso_kkt_violation(Z, t.y, lm.coef(), lambda), 1e-8);
    EXPECT_NEAR(lm.intercept(), t.y.mean(), 1e-12);
  }
}

TEST(Lasso, FullShrinkageThreshold) {
  const auto t = random_train(100, 5, 6);
  const auto s = models::Standardizer::fit(t.X);
  const Eigen::MatrixXd Z = s.apply(t.X);
  const Eigen::VectorXd yc = t.y.array() - t.y.mean();
  const double lmax = (Z.transpose() * yc).cwiseAbs().maxCoeff() / 100.0;
  FitDiagnostics d;
  EXPECT_EQ(models::fit_lasso(t, lmax * 1.0001, d).coef().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(models::fit_lasso(t, lmax * 0.99, d).coef().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Penalized, NormShrinksWithLambda) {
  const auto t = random_train(100, 6, 7);
  double prev_l1 = 1e300, prev_l2 = 1e300;
  for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    FitDiagnostics d;
    const double l1 = models::fit_lasso(t, lambda, d).coef().lpNorm<1>();
    EXPECT_LE(l1, prev_l1 + 1e-12);
    prev_l1 = l1;
  }
  for (double lambda : {1e-4, 1e-2, 1.0, 100.0, 1000.0}) {
    const double l2 = models::fit_ridge(t, lambda).coef().norm();
    EXPECT_LE(l2, prev_l2 + 1e-12);
    prev_l2 = l2;
  }
}

TEST(Penalized, AnalyticGradientMatchesFiniteDifference) {
  const auto t = random_train(40, 3, 8);
  const auto s = models::Standardizer::fit(t.X);
  const Eigen::MatrixXd Z = s.apply(t.X);
  Eigen::VectorXd w(3);
  w << 0.4, -0.7, 0.2;
  const double a = 0.1;
  for (auto kind : {Objective::OLS, Objective::RIDGE, Objective::LASSO}) {
    const auto g = models::objective_gradient(kind, Z, t.y, a, w, 0.3);
    const double h = 1e-6;
    auto f = [&](double aa, const Eigen::VectorXd& ww) { return models::objective_value(kind, Z, t.y, aa, ww, 0.3); };
    const double ga = (f(a + h, w) - f(a - h, w)) / (2 * h);
    EXPECT_NEAR(g(0), ga, 1e-5 * (1 + std::abs(ga)));
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd up = w, dn = w;
      up(j) += h;
      dn(j) -= h;
      const double gj = (f(a, up) - f(a, dn)) / (2 * h);
      EXPECT_NEAR(g(j + 1), gj, 1e-5 * (1 + std::abs(gj)));
    }
  }
}

TEST(Svr, DualFeasibility) {
  const auto t = random_train(120, 4, 9, 0.3);
  models::SvrParams p;
  p.C = 10.0;
  p.epsilon = 0.05;
  FitDiagnostics d;
  const auto m = models::fit_svr(t, p, d);
  EXPECT_TRUE(d.converged);
  const auto& a = m.alpha();
  const auto& as = m.alpha_star();
  EXPECT_GE(a.minCoeff(), -1e-12);
  EXPECT_GE(as.minCoeff(), -1e-12);
  EXPECT_LE(a.maxCoeff(), p.C + 1e-9);
  EXPECT_LE(as.maxCoeff(), p.C + 1e-9);
  EXPECT_NEAR((a - as).sum(), 0.0, 1e-8 * p.C);
  EXPECT_LE(a.cwiseProduct(as).cwiseAbs().maxCoeff(), 1e-10);
  // points strictly inside the tube carry no weight
  for (int i = 0; i < 120; ++i) {
    const double r = t.y(i) - m.predict(row(t.X, i));
    if (std::abs(r) < p.epsilon - 1e-3) {
      EXPECT_LE(a(i), 1e-8);
      EXPECT_LE(as(i), 1e-8);
    }
  }
}

TEST(Svr, IterationCapReportsNonConvergence) {
  const auto t = random_train(200, 4, 10, 1.0);
  auto spec = ModelSpec::defaults(Method::SVR);
  spec.hp.svr_max_iter = 3;
  const auto m = fit(spec, t);
  EXPECT_FALSE(m.diagnostics().converged);
  EXPECT_TRUE(std::isfinite(m.predict(row(t.X, 0))));
}

double stump_sse_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int d = static_cast<int>(y.size());
  double best = (y.array() - y.mean()).square().sum();
  for (int f = 0; f < X.cols(); ++f) {
    std::vector<int> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
    for (int k = 1; k < d; ++k) {
      if (X(idx[k - 1], f) == X(idx[k], f)) continue;
      double sl = 0, sr = 0;
      for (int i = 0; i < k; ++i) sl += y(idx[i]);
      for (int i = k; i < d; ++i) sr += y(idx[i]);
      const double ml = sl / k, mr = sr / (d - k);
      double sse = 0;
      for (int i = 0; i < k; ++i) sse += (y(idx[i]) - ml) * (y(idx[i]) - ml);
      for (int i = k; i < d; ++i) sse += (y(idx[i]) - mr) * (y(idx[i]) - mr);
      best = std::min(best, sse);
    }
  }
  return best;
}

TEST(Tree, StumpMatchesExhaustiveSearch) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto t = random_train(60, 4, 100 + seed, 1.0);
    for (int i = 0; i < 60; ++i) t.X(i, 3) = std::round(t.X(i, 3));  // ties
    std::vector<int> rows(60);
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<double> g(60), h(60, 1.0);
    for (int i = 0; i < 60; ++i) g[i] = -t.y(i);
    models::TreeParams p;
    p.max_depth = 1;
    const auto tree = models::grow_exact_tree(t.X, rows, g, h, p);
    double sse = 0;
    for (int i = 0; i < 60; ++i) sse += std::pow(t.y(i) - tree.predict_row(t.X, i), 2);
    EXPECT_NEAR(sse, stump_sse_oracle(t.X, t.y), 1e-9);
    EXPECT_EQ(tree.leaf_count(), 2);
  }
}

TEST(Boosting, TrainingLossNeverIncreases) {
  const auto t = random_train(150, 5, 11);
  for (Method m : {Method::XGB, Method::HGBT}) {
    auto spec = ModelSpec::defaults(m);
    spec.hp.n_estimators = 50;
    const auto f = fit(spec, t);
    const auto* b = f.as<models::BoostedModel>();
    ASSERT_NE(b, nullptr);
    const auto& rss = b->train_rss();
    ASSERT_EQ(rss.size(), 51u);
    for (std::size_t k = 1; k < rss.size(); ++k) EXPECT_LE(rss[k], rss[k - 1] * (1 + 1e-12));
    EXPECT_LT(rss.back(), rss.front());
  }
}

TEST(Boosting, DepthCapRespected) {
  const auto t = random_train(200, 5, 12);
  auto spec = ModelSpec::defaults(Method::XGB);
  spec.hp.max_depth = 3;
  spec.hp.n_estimators = 50;
  const auto xgb = fit(spec, t);
  for (const auto& tree : xgb.as<models::BoostedModel>()->trees()) EXPECT_LE(tree.depth(), 3);
  auto hs = ModelSpec::defaults(Method::HGBT);
  hs.hp.num_leaves = 10;
  hs.hp.n_estimators = 50;
  const auto hgbt = fit(hs, t);
  for (const auto& tree : hgbt.as<models::BoostedModel>()->trees()) EXPECT_LE(tree.leaf_count(), 10);
}

TEST(Forest, BoundedByTreesAndSeeded) {
  const auto t = random_train(100, 6, 13);
  auto spec = ModelSpec::defaults(Method::RF);
  spec.hp.n_estimators = 50;
  spec.hp.seed = 42;
  const auto a = fit(spec, t);
  const auto b = fit(spec, t);
  const auto* forest = a.as<models::ForestModel>();
  ASSERT_NE(forest, nullptr);
  for (int i = 0; i < 20; ++i) {
    const auto x = row(t.X, i);
    double lo = 1e300, hi = -1e300;
    for (const auto& tree : forest->trees()) {
      lo = std::min(lo, tree.predict(x));
      hi = std::max(hi, tree.predict(x));
    }
    EXPECT_GE(a.predict(x), lo - 1e-12);
    EXPECT_LE(a.predict(x), hi + 1e-12);
    EXPECT_EQ(a.predict(x), b.predict(x));
    EXPECT_GE(a.predict(x), t.y.minCoeff() - 1e-12);
    EXPECT_LE(a.predict(x), t.y.maxCoeff() + 1e-12);
  }
  spec.hp.seed = 43;
  EXPECT_NE(fit(spec, t).predict(row(t.X, 0)), a.predict(row(t.X, 0)));
}

TEST(AdaBoost, PredictsWithinTargetRange) {
  const auto t = random_train(100, 4, 14);
  auto spec = ModelSpec::defaults(Method::ADABOOST);
  spec.hp.n_estimators = 50;
  const auto m = fit(spec, t);
  const auto* ada = m.as<models::AdaBoostModel>();
  ASSERT_NE(ada, nullptr);
  EXPECT_EQ(ada->trees().size(), ada->weights().size());
  for (int i = 0; i < 100; ++i) {
    const double p = m.predict(row(t.X, i));
    EXPECT_GE(p, t.y.minCoeff() - 1e-12);
    EXPECT_LE(p, t.y.maxCoeff() + 1e-12);
  }
}

TEST(Models, PermutationEquivariance) {
  const auto t = random_train(80, 5, 15);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  TrainSet p = t;
  for (int j = 0; j < 5; ++j) {
    p.X.col(j) = t.X.col(perm[j]);
    p.feature_ids[j] = t.feature_ids[perm[j]];
  }
  for (Method m : {Method::OLS, Method::RIDGE, Method::LASSO, Method::XGB, Method::HGBT}) {
    auto spec = ModelSpec::defaults(m);
    spec.hp.n_estimators = 50;
    const auto a = fit(spec, t);
    const auto b = fit(spec, p);
    for (int i = 0; i < 10; ++i) {
      const auto x = row(t.X, i), xp = row(p.X, i);
      EXPECT_NEAR(a.predict(x), b.predict(xp), 1e-9) << to_string(m);
    }
  }
}

TEST(Models, FitValidatesInput) {
  auto t = random_train(30, 3, 16);
  t.feature_ids.pop_back();
  EXPECT_THROW(fit(ModelSpec::defaults(Method::OLS), t), Error);
  t = random_train(30, 3, 16);
  t.y(4) = std::nan("");
  EXPECT_THROW(fit(ModelSpec::defaults(Method::OLS), t), Error);
  t = random_train(30, 3, 16);
  const auto m = fit(ModelSpec::defaults(Method::OLS), t);
  const std::vector<double> short_x{1.0, 2.0};
  EXPECT_THROW(m.predict(short_x), Error);
  EXPECT_THROW(fit(ModelSpec::defaults(Method::ENS_AVG), t), Error);
  std::ostringstream out;
  m.dump(out);
  EXPECT_NE(out.str().find("method OLS"), std::string::npos);
}

TEST(Ensemble, AverageAndMedian) {
  const std::vector<double> p{1, 2, 3, 4, 5, 6, 7, 100};
  EXPECT_DOUBLE_EQ(ensemble_predict(p, EnsembleMode::Average), 16.0);
  EXPECT_DOUBLE_EQ(ensemble_predict(p, EnsembleMode::Median), 4.5);
  const std::vector<double> seven{1, 2, 3, 4, 5, 6, 7};
  EXPECT_THROW(ensemble_predict(seven, EnsembleMode::Average), Error);
}

TEST(Grid, SizesAndDomains) {
  EXPECT_EQ(hyperparameter_grid(Method::LASSO).size(), 8u);
  EXPECT_EQ(hyperparameter_grid(Method::RIDGE).size(), 8u);
  EXPECT_EQ(hyperparameter_grid(Method::SVR).size(), 5u);
  EXPECT_EQ(hyperparameter_grid(Method::XGB).size(), 27u);
  EXPECT_EQ(hyperparameter_grid(Method::HGBT).size(), 27u);
  EXPECT_EQ(hyperparameter_grid(Method::ADABOOST).size(), 27u);
  EXPECT_EQ(hyperparameter_grid(Method::RF).size(), 9u);
  EXPECT_TRUE(hyperparameter_grid(Method::OLS).empty());
  for (Method m : kBaseMethods) {
    EXPECT_NO_THROW(ModelSpec::defaults(m).validate());
    for (const auto& s : hyperparameter_grid(m)) EXPECT_NO_THROW(s.validate());
  }
  auto s = ModelSpec::defaults(Method::XGB);
  s.hp.max_depth = 12;
  EXPECT_THROW(s.validate(), Error);
  s.allow_override = true;
  EXPECT_NO_THROW(s.validate());
  s = ModelSpec::defaults(Method::LASSO);
  s.hp.lambda = 5000;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Method, ParseNamesAndAliases) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_EQ(parse_method("LGBM"), Method::HGBT);
  EXPECT_EQ(parse_method("SVM"), Method::SVR);
  EXPECT_THROW(parse_method("KNN"), Error);
}

}  // namespace
}  // namespace xmkt

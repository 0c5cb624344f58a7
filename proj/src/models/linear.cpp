#include "xmkt/models/linear.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>
#include <ostream>

namespace xmkt::models {

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double sd = std::sqrt((X.col(j).array() - s.mean(j)).square().mean());
    s.scale(j) = sd > 0 ? sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::centering(const Eigen::MatrixXd& X) {
  Standardizer s;
  s.mean = X.colwise().mean().transpose();
  s.scale = Eigen::VectorXd::Ones(X.cols());
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

double LinearModel::predict(std::span<const double> x) const {
  double acc = intercept_;
  for (Eigen::Index j = 0; j < coef_.size(); ++j)
    acc += coef_(j) * ((x[j] - standardizer_.mean(j)) / standardizer_.scale(j));
  return acc;
}

Eigen::VectorXd LinearModel::raw_coefficients() const { return coef_.array() / standardizer_.scale.array(); }

double LinearModel::raw_intercept() const { return intercept_ - raw_coefficients().dot(standardizer_.mean); }

void LinearModel::dump(std::ostream& out) const {
  out << "intercept " << raw_intercept() << "\ncoefficients";
  for (double c : raw_coefficients()) out << ' ' << c;
  out << "\n";
}

LinearModel fit_ols(const TrainSet& train) {
  auto s = Standardizer::centering(train.X);
  const Eigen::MatrixXd Xc = s.apply(train.X);
  const double ybar = train.y.mean();
  const Eigen::VectorXd yc = train.y.array() - ybar;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Xc);
  Eigen::VectorXd w = cod.solve(yc);
  return LinearModel(std::move(s), ybar, std::move(w));
}

LinearModel fit_ridge(const TrainSet& train, double lambda) {
  auto s = Standardizer::fit(train.X);
  const Eigen::MatrixXd Z = s.apply(train.X);
  const double ybar = train.y.mean();
  const Eigen::VectorXd yc = train.y.array() - ybar;
  Eigen::VectorXd w;
  if (lambda > 0) {
    Eigen::MatrixXd A = Z.transpose() * Z;
    A.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() == Eigen::Success) w = ldlt.solve(Z.transpose() * yc);
  }
  if (w.size() == 0 || !w.allFinite()) {
    Eigen::MatrixXd A = Z.transpose() * Z;
    A.diagonal().array() += lambda;
    w = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(A).solve(Z.transpose() * yc);
  }
  return LinearModel(std::move(s), ybar, std::move(w));
}

double lasso_kkt_violation(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           double lambda) {
  const double d = static_cast<double>(Z.rows());
  const Eigen::VectorXd zc_mean = Z.colwise().mean().transpose();
  const Eigen::VectorXd r = (y.array() - y.mean()).matrix() - (Z.rowwise() - zc_mean.transpose()) * w;
  const Eigen::VectorXd corr = (Z.rowwise() - zc_mean.transpose()).transpose() * r / d;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double v = w(j) == 0.0 ? std::max(0.0, std::abs(corr(j)) - lambda)
                                 : std::abs(corr(j) - lambda * (w(j) > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

LinearModel fit_lasso(const TrainSet& train, double lambda, FitDiagnostics& diagnostics) {
  auto s = Standardizer::fit(train.X);
  const Eigen::MatrixXd Z = s.apply(train.X);
  const Eigen::Index d = Z.rows(), n = Z.cols();
  const double dd = static_cast<double>(d);
  const double ybar = train.y.mean();
  Eigen::VectorXd r = train.y.array() - ybar;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a(n);
  for (Eigen::Index j = 0; j < n; ++j) a(j) = Z.col(j).squaredNorm() / dd;

  constexpr double kKktTol = 1e-10;
  constexpr int kMaxSweeps = 100000;
  int sweep = 0;
  bool converged = false;
  for (; sweep < kMaxSweeps; ++sweep) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double g = Z.col(j).dot(r) / dd;
      const double v = w(j) == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                   : std::abs(g - lambda * (w(j) > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    if (worst <= kKktTol) {
      converged = true;
      break;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (a(j) == 0.0) continue;
      const double rho = Z.col(j).dot(r) / dd + a(j) * w(j);
      const double shrunk = rho > lambda ? rho - lambda : (rho < -lambda ? rho + lambda : 0.0);
      const double wn = shrunk / a(j);
      if (wn != w(j)) {
        r -= (wn - w(j)) * Z.col(j);
        w(j) = wn;
      }
    }
  }
  diagnostics.converged = converged;
  diagnostics.iterations = sweep;
  return LinearModel(std::move(s), ybar, std::move(w));
}

double objective_value(Objective kind, const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double intercept,
                       const Eigen::VectorXd& w, double lambda) {
  const Eigen::VectorXd r = (y.array() - intercept).matrix() - Z * w;
  switch (kind) {
    case Objective::OLS:
      return r.squaredNorm();
    case Objective::RIDGE:
      return r.squaredNorm() + lambda * w.squaredNorm();
    case Objective::LASSO:
      return r.squaredNorm() / (2.0 * static_cast<double>(Z.rows())) + lambda * w.lpNorm<1>();
  }
  return 0.0;
}

Eigen::VectorXd objective_gradient(Objective kind, const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                   double intercept, const Eigen::VectorXd& w, double lambda) {
  const Eigen::VectorXd r = (y.array() - intercept).matrix() - Z * w;
  Eigen::VectorXd g(w.size() + 1);
  double scale = kind == Objective::LASSO ? 1.0 / static_cast<double>(Z.rows()) : 2.0;
  g(0) = -scale * r.sum();
  g.tail(w.size()) = -scale * (Z.transpose() * r);
  if (kind == Objective::RIDGE) g.tail(w.size()) += 2.0 * lambda * w;
  if (kind == Objective::LASSO) g.tail(w.size()) += lambda * w.unaryExpr([](double v) { return v > 0 ? 1.0 : v < 0 ? -1.0 : 0.0; });
  return g;
}

}  // namespace xmkt::models

#pragma once

#include <Eigen/Core>

#include "xmkt/models.hpp"

namespace xmkt::models {

/// Per-feature (mean, scale) from the training window. Constant features
/// get scale 1 so they map to 0.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  static Standardizer centering(const Eigen::MatrixXd& X);  // scale = 1
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

/// y = intercept + coef' * ((x - mean) / scale).
class LinearModel final : public Regressor {
 public:
  LinearModel(Standardizer s, double intercept, Eigen::VectorXd coef)
      : standardizer_(std::move(s)), intercept_(intercept), coef_(std::move(coef)) {}

  double predict(std::span<const double> x) const override;
  void dump(std::ostream& out) const override;

  const Standardizer& standardizer() const { return standardizer_; }
  double intercept() const { return intercept_; }
  const Eigen::VectorXd& coef() const { return coef_; }

  /// Coefficients and intercept on the raw feature scale.
  Eigen::VectorXd raw_coefficients() const;
  double raw_intercept() const;

 private:
  Standardizer standardizer_;
  double intercept_;
  Eigen::VectorXd coef_;
};

/// Minimum-norm least squares on centered raw features (rank revealing).
LinearModel fit_ols(const TrainSet& train);

/// (Z'Z + lambda I)^{-1} Z'(y - ybar) on standardized, centered Z.
LinearModel fit_ridge(const TrainSet& train, double lambda);

/// Coordinate descent on (1/(2d)) ||y - a - Zw||^2 + lambda ||w||_1 with
/// standardized Z; stops when the largest KKT violation is below 1e-10.
LinearModel fit_lasso(const TrainSet& train, double lambda, FitDiagnostics& diagnostics);

enum class Objective { OLS, RIDGE, LASSO };

/// Objective value at (intercept, w) for design Z and response y, in the
/// scaling each solver minimizes.
double objective_value(Objective kind, const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, double intercept,
                       const Eigen::VectorXd& w, double lambda);

/// Analytic gradient [d/d intercept, d/d w_1, ..., d/d w_n]; LASSO uses
/// sign(w_j) and is only a gradient where every w_j != 0.
Eigen::VectorXd objective_gradient(Objective kind, const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                   double intercept, const Eigen::VectorXd& w, double lambda);

/// Largest violation of the LASSO optimality conditions at w (intercept
/// profiled out): |Z_j'r/d| <= lambda for w_j = 0, Z_j'r/d = lambda sign(w_j) otherwise.
double lasso_kkt_violation(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                           double lambda);

}  // namespace xmkt::models

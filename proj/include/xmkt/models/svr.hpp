#pragma once

#include <Eigen/Core>

#include "xmkt/models.hpp"
#include "xmkt/models/linear.hpp"

namespace xmkt::models {

struct SvrParams {
  double C = 10.0;
  double epsilon = 1e-4;
  std::optional<double> gamma;
  double tol = 1e-4;
  int max_iter = 10000;
};

/// epsilon-SVR with an RBF kernel on standardized features:
/// f(x) = sum_j (alpha_j - alpha*_j) K(x_j, x) + b.
class SvrModel final : public Regressor {
 public:
  SvrModel(Standardizer s, Eigen::MatrixXd support, Eigen::VectorXd alpha, Eigen::VectorXd alpha_star, double b,
           double gamma);

  double predict(std::span<const double> x) const override;
  void dump(std::ostream& out) const override;

  const Eigen::VectorXd& alpha() const { return alpha_; }
  const Eigen::VectorXd& alpha_star() const { return alpha_star_; }
  double bias() const { return b_; }
  double gamma() const { return gamma_; }

 private:
  Standardizer standardizer_;
  Eigen::MatrixXd support_;  // standardized training rows
  Eigen::VectorXd alpha_, alpha_star_, coef_;
  double b_;
  double gamma_;
};

SvrModel fit_svr(const TrainSet& train, const SvrParams& params, FitDiagnostics& diagnostics);

}  // namespace xmkt::models

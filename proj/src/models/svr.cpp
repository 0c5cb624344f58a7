#include "xmkt/models/svr.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace xmkt::models {

namespace {

constexpr double kTau = 1e-12;

double rbf(const Eigen::MatrixXd& A, Eigen::Index i, const Eigen::MatrixXd& B, Eigen::Index j, double gamma) {
  return std::exp(-gamma * (A.row(i) - B.row(j)).squaredNorm());
}

}  // namespace

SvrModel::SvrModel(Standardizer s, Eigen::MatrixXd support, Eigen::VectorXd alpha, Eigen::VectorXd alpha_star,
                   double b, double gamma)
    : standardizer_(std::move(s)),
      support_(std::move(support)),
      alpha_(std::move(alpha)),
      alpha_star_(std::move(alpha_star)),
      coef_(alpha_ - alpha_star_),
      b_(b),
      gamma_(gamma) {}

double SvrModel::predict(std::span<const double> x) const {
  const Eigen::Index n = support_.cols();
  Eigen::RowVectorXd z(n);
  for (Eigen::Index j = 0; j < n; ++j) z(j) = (x[j] - standardizer_.mean(j)) / standardizer_.scale(j);
  double acc = b_;
  for (Eigen::Index i = 0; i < support_.rows(); ++i) {
    if (coef_(i) == 0.0) continue;
    acc += coef_(i) * std::exp(-gamma_ * (support_.row(i) - z).squaredNorm());
  }
  return acc;
}

void SvrModel::dump(std::ostream& out) const {
  out << "gamma " << gamma_ << "\nbias " << b_ << "\ndual_coef";
  for (double c : coef_) out << ' ' << c;
  out << "\n";
}

SvrModel fit_svr(const TrainSet& train, const SvrParams& params, FitDiagnostics& diagnostics) {
  auto s = Standardizer::fit(train.X);
  Eigen::MatrixXd Z = s.apply(train.X);
  const Eigen::Index d = Z.rows();
  const Eigen::Index n = Z.cols();

  double gamma = 1.0;
  if (params.gamma) {
    gamma = *params.gamma;
  } else {
    const double m = Z.mean();
    const double var = (Z.array() - m).square().mean();
    if (var > 0 && n > 0) gamma = 1.0 / (static_cast<double>(n) * var);
  }

  Eigen::MatrixXd K(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) K(i, j) = K(j, i) = rbf(Z, i, Z, j, gamma);
  }

  // Variables 0..d-1 are alpha (sign +1), d..2d-1 are alpha* (sign -1).
  // v = -sign * gradient; I_up / I_low are the usual SMO index sets.
  const Eigen::Index l = 2 * d;
  const double C = params.C;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> a(l, 0.0), v(l), sgn(l);
  std::vector<char> in_up(l), in_low(l);
  for (Eigen::Index t = 0; t < l; ++t) {
    const bool plus = t < d;
    sgn[t] = plus ? 1.0 : -1.0;
    v[t] = plus ? train.y(t) - params.epsilon : train.y(t - d) + params.epsilon;
  }
  auto refresh = [&](Eigen::Index t) {
    const bool at_upper = a[t] >= C, at_lower = a[t] <= 0.0;
    in_up[t] = sgn[t] > 0 ? !at_upper : !at_lower;
    in_low[t] = sgn[t] > 0 ? !at_lower : !at_upper;
  };
  for (Eigen::Index t = 0; t < l; ++t) refresh(t);

  int iter = 0;
  bool converged = false;
  for (; iter < params.max_iter; ++iter) {
    double gmax = -inf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < l; ++t)
      if (in_up[t] && v[t] >= gmax) gmax = v[t], i = t;
    if (i < 0) {
      converged = true;
      break;
    }
    const double* Ki = K.col(i % d).data();
    double gmin = inf;
    Eigen::Index j = -1;
    double best = inf;
    for (Eigen::Index t = 0; t < l; ++t) {
      if (!in_low[t]) continue;
      gmin = std::min(gmin, v[t]);
      const double diff = gmax - v[t];
      if (diff > 0) {
        const double quad = 2.0 - 2.0 * Ki[t < d ? t : t - d];
        const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
        if (obj <= best) best = obj, j = t;
      }
    }
    if (j < 0 || gmax - gmin < params.tol) {
      converged = true;
      break;
    }
    const double ai = a[i], aj = a[j];
    const double Gi = -sgn[i] * v[i], Gj = -sgn[j] * v[j];
    const double Kij = Ki[j % d];
    if (sgn[i] != sgn[j]) {
      double quad = 2.0 + 2.0 * sgn[i] * sgn[j] * Kij;
      if (quad <= 0) quad = kTau;
      const double delta = (-Gi - Gj) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) a[j] = 0, a[i] = diff;
      } else if (a[i] < 0) {
        a[i] = 0, a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) a[i] = C, a[j] = C - diff;
      } else if (a[j] > C) {
        a[j] = C, a[i] = C + diff;
      }
    } else {
      double quad = 2.0 - 2.0 * Kij;
      if (quad <= 0) quad = kTau;
      const double delta = (Gi - Gj) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) a[i] = C, a[j] = sum - C;
      } else if (a[j] < 0) {
        a[j] = 0, a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) a[j] = C, a[i] = sum - C;
      } else if (a[i] < 0) {
        a[i] = 0, a[j] = sum;
      }
    }
    refresh(i);
    refresh(j);
    const double ci = sgn[i] * (a[i] - ai), cj = sgn[j] * (a[j] - aj);
    const double* Kj = K.col(j % d).data();
    for (Eigen::Index t = 0; t < d; ++t) {
      const double delta = Ki[t] * ci + Kj[t] * cj;
      v[t] -= delta;
      v[t + d] -= delta;
    }
  }

  // bias from free variables, else the midpoint of the feasible interval
  double ub = inf, lb = -inf, sum_free = 0.0;
  int nr_free = 0;
  for (Eigen::Index t = 0; t < l; ++t) {
    const double yg = -v[t];
    if (a[t] >= C) {
      if (sgn[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (sgn[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++nr_free;
      sum_free += yg;
    }
  }
  const double rho = nr_free > 0 ? sum_free / nr_free : (ub + lb) / 2.0;

  Eigen::VectorXd alpha(d), alpha_star(d);
  for (Eigen::Index t = 0; t < d; ++t) {
    alpha(t) = a[t];
    alpha_star(t) = a[t + d];
  }
  diagnostics.converged = converged;
  diagnostics.iterations = iter;
  return SvrModel(std::move(s), std::move(Z), std::move(alpha), std::move(alpha_star), -rho, gamma);
}

}  // namespace xmkt::models

#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xmkt {

enum class Method { OLS, LASSO, RIDGE, SVR, XGB, HGBT, RF, ADABOOST, ENS_AVG, ENS_MED };

/// The eight fitted methods, in the fixed order the ensembles consume them.
inline constexpr std::array<Method, 8> kBaseMethods = {Method::OLS, Method::LASSO, Method::RIDGE,
                                                       Method::SVR, Method::XGB,   Method::HGBT,
                                                       Method::RF,  Method::ADABOOST};
inline constexpr std::array<Method, 10> kAllMethods = {
    Method::OLS, Method::LASSO, Method::RIDGE,    Method::SVR,     Method::XGB,
    Method::HGBT, Method::RF,   Method::ADABOOST, Method::ENS_AVG, Method::ENS_MED};

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view name);
inline bool is_ensemble(Method m) { return m == Method::ENS_AVG || m == Method::ENS_MED; }

struct Hyperparameters {
  double lambda = 0.1;              // LASSO / RIDGE penalty
  double C = 10.0;                  // SVR box constraint
  double epsilon = 1e-4;            // SVR tube half-width
  std::optional<double> rbf_gamma;  // SVR kernel width; default 1 / (n * feature variance)
  double svr_tol = 1e-4;
  int svr_max_iter = 10000;
  int max_depth = 6;                // <= 0 means unlimited
  double learning_rate = 0.1;
  int n_estimators = 100;
  int num_leaves = 31;              // HGBT
  int min_samples_leaf = 1;         // HGBT uses min_data_in_leaf = 20
  double split_gamma = 0.0;         // minimum split gain (boosting)
  double leaf_l2 = 1.0;             // L2 penalty on leaf weights (boosting)
  double min_child_weight = 1.0;    // boosting, hessian units
  int max_features = 0;             // RF features per split; 0 -> max(1, n/3)
  int max_bins = 256;               // HGBT histogram bins
  std::uint64_t seed = 0;
};

struct ModelSpec {
  Method method = Method::OLS;
  Hyperparameters hp;
  bool allow_override = false;  // skip the grid-domain check

  /// Mid-grid defaults per method.
  static ModelSpec defaults(Method m);

  /// Hyperparameters must lie inside the tuning-grid domains unless
  /// allow_override is set; throws InvalidHyperparameter.
  void validate() const;
};

/// Every grid cell of the tuning table for one method (empty for OLS and the
/// ensembles). Each cell starts from ModelSpec::defaults.
std::vector<ModelSpec> hyperparameter_grid(Method m);

/// Rows are training dates, columns the selected predictors.
struct TrainSet {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> feature_ids;

  void validate() const;
};

struct FitDiagnostics {
  bool converged = true;
  int iterations = 0;
};

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(std::span<const double> x) const = 0;
  virtual void dump(std::ostream& out) const = 0;
};

/// Immutable after construction and safe to share across threads.
class FittedModel {
 public:
  FittedModel(ModelSpec spec, std::vector<std::string> feature_ids, std::shared_ptr<const Regressor> impl,
              FitDiagnostics diagnostics = {});

  /// Throws DimensionMismatch if x does not match feature_ids.
  double predict(std::span<const double> x) const;

  const ModelSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_ids() const { return feature_ids_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }

  template <class T>
  const T* as() const {
    return dynamic_cast<const T*>(impl_.get());
  }

  /// Audit dump: method, hyperparameters, features, fitted state.
  void dump(std::ostream& out) const;

 private:
  ModelSpec spec_;
  std::vector<std::string> feature_ids_;
  std::shared_ptr<const Regressor> impl_;
  FitDiagnostics diagnostics_;
};

/// Fits one of the eight base methods. Ensembles are not fitted; see
/// ensemble_predict.
FittedModel fit(const ModelSpec& spec, const TrainSet& train);

enum class EnsembleMode { Average, Median };

/// Combines exactly eight base predictions (kBaseMethods order).
double ensemble_predict(std::span<const double> base_predictions, EnsembleMode mode);

}  // namespace xmkt

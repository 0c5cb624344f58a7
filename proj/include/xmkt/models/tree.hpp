#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xmkt/rng.hpp"

namespace xmkt::models {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

/// Binary regression tree; x[feature] <= threshold goes left.
class RegressionTree {
 public:
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const;
  double predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const;
  int leaf_count() const;
  int depth() const;
  void scale_leaves(double factor);
  void dump(std::ostream& out) const;
};

/// Split search works on gradient statistics (g, h). Gain of a split is
/// 0.5 * [GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)] - gamma and a
/// leaf's value is -G/(H+lambda). Squared-error CART is g = -y, h = 1,
/// lambda = 0. Ties go to the lower feature index, then the lower threshold.
struct TreeParams {
  int max_depth = 6;  // <= 0: unlimited
  double lambda = 0.0;
  double gamma = 0.0;
  double min_child_weight = 0.0;
  int min_samples_leaf = 1;
  int max_features = 0;  // per-node random subset size; 0: all features
  int num_leaves = 0;    // leaf-wise growth cap (histogram builder only)
};

/// Row indices of X sorted ascending per feature (ties by row index).
struct SortedColumns {
  std::vector<std::vector<int>> order;
  static SortedColumns build(const Eigen::MatrixXd& X);
};

/// Exact greedy, depth-wise. rows lists training rows of X (duplicates
/// allowed, e.g. a bootstrap sample); g and h align with rows.
RegressionTree grow_exact_tree(const Eigen::MatrixXd& X, std::span<const int> rows, std::span<const double> g,
                               std::span<const double> h, const TreeParams& params, rng::Engine* engine = nullptr,
                               const SortedColumns* presorted = nullptr);

/// Quantile-binned features for the histogram builder.
struct BinnedFeatures {
  int rows = 0;
  std::vector<std::vector<double>> thresholds;  // per feature, ascending bin upper edges
  std::vector<std::vector<std::uint16_t>> codes;  // per feature, per row

  static BinnedFeatures build(const Eigen::MatrixXd& X, int max_bins);
  int bins(int feature) const { return static_cast<int>(thresholds[feature].size()) + 1; }
};

/// Histogram-based, leaf-wise: repeatedly splits the leaf with the largest
/// gain until num_leaves is reached or no split improves the loss.
RegressionTree grow_leafwise_tree(const BinnedFeatures& binned, std::span<const double> g, std::span<const double> h,
                                  const TreeParams& params);

}  // namespace xmkt::models

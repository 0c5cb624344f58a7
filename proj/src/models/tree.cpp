#include "xmkt/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace xmkt::models {

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  int code = -1;  // histogram bin of the threshold
};

double leaf_value(double G, double H, double lambda) {
  const double denom = H + lambda;
  return denom > 0 ? -G / denom : 0.0;
}

double score(double G, double H, double lambda) {
  const double denom = H + lambda;
  return denom > 0 ? G * G / denom : 0.0;
}

// Splits must beat this to count; avoids splitting on rounding noise.
double min_gain(double sum_g2, double G, double H, double lambda) {
  const double spread = std::max(0.0, sum_g2 - score(G, H, lambda));
  return 1e-12 * spread + 1e-300;
}

bool depth_allows(int depth, int max_depth) { return max_depth <= 0 || depth < max_depth; }

int subtree_depth(const std::vector<TreeNode>& nodes, int idx) {
  const auto& n = nodes[idx];
  if (n.feature < 0) return 0;
  return 1 + std::max(subtree_depth(nodes, n.left), subtree_depth(nodes, n.right));
}

}  // namespace

double RegressionTree::predict(std::span<const double> x) const {
  int i = 0;
  while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

double RegressionTree::predict_row(const Eigen::MatrixXd& X, Eigen::Index row) const {
  int i = 0;
  while (nodes[i].feature >= 0)
    i = X(row, nodes[i].feature) <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

int RegressionTree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

int RegressionTree::depth() const { return nodes.empty() ? 0 : subtree_depth(nodes, 0); }

void RegressionTree::scale_leaves(double factor) {
  for (auto& n : nodes)
    if (n.feature < 0) n.value *= factor;
}

void RegressionTree::dump(std::ostream& out) const {
  out << "tree " << nodes.size() << "\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.feature < 0)
      out << "  " << i << " leaf " << n.value << "\n";
    else
      out << "  " << i << " x" << n.feature << " <= " << n.threshold << " ? " << n.left << " : " << n.right << "\n";
  }
}

// ---------------------------------------------------------------------------
// exact greedy

SortedColumns SortedColumns::build(const Eigen::MatrixXd& X) {
  SortedColumns s;
  const int n = static_cast<int>(X.rows());
  s.order.resize(X.cols());
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    auto& o = s.order[f];
    o.resize(n);
    std::iota(o.begin(), o.end(), 0);
    std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return X(a, f) < X(b, f); });
  }
  return s;
}

RegressionTree grow_exact_tree(const Eigen::MatrixXd& X, std::span<const int> rows, std::span<const double> g,
                               std::span<const double> h, const TreeParams& params, rng::Engine* engine,
                               const SortedColumns* presorted) {
  const int m = static_cast<int>(rows.size());
  const int nf = static_cast<int>(X.cols());
  RegressionTree tree;
  tree.nodes.emplace_back();
  if (m == 0) return tree;
  if (nf == 0) {
    double G = 0, H = 0;
    for (int p = 0; p < m; ++p) G += g[p], H += h[p];
    tree.nodes[0].value = leaf_value(G, H, params.lambda);
    return tree;
  }

  auto val = [&](int p, int f) { return X(rows[p], f); };

  std::vector<std::vector<int>> order(nf, std::vector<int>(m));
  if (presorted) {
    // bucket positions by row, then read them off in each feature's row order
    const int nrows = static_cast<int>(X.rows());
    std::vector<int> start(nrows + 1, 0), by_row(m);
    for (int p = 0; p < m; ++p) ++start[rows[p] + 1];
    for (int r = 0; r < nrows; ++r) start[r + 1] += start[r];
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (int p = 0; p < m; ++p) by_row[fill[rows[p]]++] = p;
    for (int f = 0; f < nf; ++f) {
      int k = 0;
      for (int r : presorted->order[f])
        for (int q = start[r]; q < start[r + 1]; ++q) order[f][k++] = by_row[q];
    }
  } else {
    for (int f = 0; f < nf; ++f) {
      auto& o = order[f];
      std::iota(o.begin(), o.end(), 0);
      std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return val(a, f) < val(b, f); });
    }
  }

  const int mtry = params.max_features > 0 ? std::min(params.max_features, nf) : nf;
  std::vector<int> features(nf);
  std::iota(features.begin(), features.end(), 0);
  std::vector<char> left_flag(m);
  std::vector<int> buffer(m);
  std::vector<int> chosen;

  struct Task {
    int begin, end, node, depth;
  };
  std::vector<Task> stack{{0, m, 0, 0}};
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    double G = 0, H = 0, sum_g2 = 0;
    for (int k = task.begin; k < task.end; ++k) {
      const int p = order[0][k];
      G += g[p];
      H += h[p];
      sum_g2 += g[p] * g[p] / std::max(h[p], 1e-300);
    }
    tree.nodes[task.node].value = leaf_value(G, H, params.lambda);
    const int count = task.end - task.begin;
    if (!depth_allows(task.depth, params.max_depth) || count < 2 * params.min_samples_leaf) continue;

    if (mtry < nf && engine) {
      chosen = features;
      for (int k = 0; k < mtry; ++k) {
        std::uniform_int_distribution<int> pick(k, nf - 1);
        std::swap(chosen[k], chosen[pick(*engine)]);
      }
      chosen.resize(mtry);
      std::sort(chosen.begin(), chosen.end());
    } else {
      chosen = features;
    }

    const double parent = score(G, H, params.lambda);
    Split best;
    best.gain = min_gain(sum_g2, G, H, params.lambda);
    for (int f : chosen) {
      const auto& o = order[f];
      double GL = 0, HL = 0;
      for (int k = task.begin; k < task.end - 1; ++k) {
        const int p = o[k];
        GL += g[p];
        HL += h[p];
        const double v = val(p, f), vn = val(o[k + 1], f);
        if (!(v < vn)) continue;
        const int nl = k - task.begin + 1, nr = count - nl;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double HR = H - HL, GR = G - GL;
        if (HL < params.min_child_weight || HR < params.min_child_weight) continue;
        const double gain = 0.5 * (score(GL, HL, params.lambda) + score(GR, HR, params.lambda) - parent) - params.gamma;
        if (gain > best.gain) {
          double thr = 0.5 * (v + vn);
          if (!(thr < vn)) thr = v;
          best = {f, thr, gain, -1};
        }
      }
    }
    if (best.feature < 0) continue;

    for (int k = task.begin; k < task.end; ++k) {
      const int p = order[0][k];
      left_flag[p] = val(p, best.feature) <= best.threshold ? 1 : 0;
    }
    int n_left = 0;
    for (int f = 0; f < nf; ++f) {
      auto& o = order[f];
      int w = task.begin, b = 0;
      for (int k = task.begin; k < task.end; ++k) {
        if (left_flag[o[k]]) o[w++] = o[k];
        else buffer[b++] = o[k];
      }
      std::copy(buffer.begin(), buffer.begin() + b, o.begin() + w);
      n_left = w - task.begin;
    }
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[task.node];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = li;
    node.right = li + 1;
    const int mid = task.begin + n_left;
    stack.push_back({mid, task.end, li + 1, task.depth + 1});
    stack.push_back({task.begin, mid, li, task.depth + 1});
  }
  return tree;
}

// ---------------------------------------------------------------------------
// histogram, leaf-wise

BinnedFeatures BinnedFeatures::build(const Eigen::MatrixXd& X, int max_bins) {
  BinnedFeatures b;
  b.rows = static_cast<int>(X.rows());
  const int n = b.rows;
  b.thresholds.resize(X.cols());
  b.codes.resize(X.cols());
  std::vector<double> sorted(n);
  for (Eigen::Index f = 0; f < X.cols(); ++f) {
    for (int i = 0; i < n; ++i) sorted[i] = X(i, f);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct;
    for (double v : sorted)
      if (distinct.empty() || v > distinct.back()) distinct.push_back(v);
    auto& thr = b.thresholds[f];
    auto midpoint = [](double a, double c) {
      const double t = 0.5 * (a + c);
      return t < c ? t : a;
    };
    if (static_cast<int>(distinct.size()) <= max_bins) {
      for (std::size_t k = 0; k + 1 < distinct.size(); ++k) thr.push_back(midpoint(distinct[k], distinct[k + 1]));
    } else {
      for (int k = 1; k < max_bins; ++k) {
        const std::size_t rank = static_cast<std::size_t>((static_cast<long long>(k) * n) / max_bins);
        if (rank == 0 || rank >= sorted.size()) continue;
        if (!(sorted[rank - 1] < sorted[rank])) continue;
        const double t = midpoint(sorted[rank - 1], sorted[rank]);
        if (thr.empty() || t > thr.back()) thr.push_back(t);
      }
    }
    auto& codes = b.codes[f];
    codes.resize(n);
    for (int i = 0; i < n; ++i)
      codes[i] = static_cast<std::uint16_t>(std::lower_bound(thr.begin(), thr.end(), X(i, f)) - thr.begin());
  }
  return b;
}

RegressionTree grow_leafwise_tree(const BinnedFeatures& binned, std::span<const double> g, std::span<const double> h,
                                  const TreeParams& params) {
  const int nf = static_cast<int>(binned.codes.size());
  RegressionTree tree;
  tree.nodes.emplace_back();

  struct Leaf {
    int node;
    int depth;
    std::vector<int> rows;
    double G = 0, H = 0;
    Split split;
  };

  std::vector<double> hg, hh;
  std::vector<int> hc;
  auto evaluate = [&](Leaf& leaf) {
    leaf.G = leaf.H = 0;
    double sum_g2 = 0;
    for (int r : leaf.rows) {
      leaf.G += g[r];
      leaf.H += h[r];
      sum_g2 += g[r] * g[r] / std::max(h[r], 1e-300);
    }
    leaf.split = Split{};
    leaf.split.gain = min_gain(sum_g2, leaf.G, leaf.H, params.lambda);
    const int count = static_cast<int>(leaf.rows.size());
    if (!depth_allows(leaf.depth, params.max_depth) || count < 2 * params.min_samples_leaf) {
      leaf.split.feature = -1;
      return;
    }
    const double parent = score(leaf.G, leaf.H, params.lambda);
    for (int f = 0; f < nf; ++f) {
      const int nb = binned.bins(f);
      hg.assign(nb, 0.0);
      hh.assign(nb, 0.0);
      hc.assign(nb, 0);
      const auto& codes = binned.codes[f];
      for (int r : leaf.rows) {
        hg[codes[r]] += g[r];
        hh[codes[r]] += h[r];
        ++hc[codes[r]];
      }
      double GL = 0, HL = 0;
      int nl = 0;
      for (int b = 0; b + 1 < nb; ++b) {
        GL += hg[b];
        HL += hh[b];
        nl += hc[b];
        if (hc[b] == 0) continue;
        const int nr = count - nl;
        if (nr == 0) break;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double GR = leaf.G - GL, HR = leaf.H - HL;
        if (HL < params.min_child_weight || HR < params.min_child_weight) continue;
        const double gain =
            0.5 * (score(GL, HL, params.lambda) + score(GR, HR, params.lambda) - parent) - params.gamma;
        if (gain > leaf.split.gain) leaf.split = {f, binned.thresholds[f][b], gain, b};
      }
    }
  };

  std::vector<Leaf> leaves;
  leaves.push_back({0, 0, {}, 0, 0, {}});
  leaves[0].rows.resize(binned.rows);
  std::iota(leaves[0].rows.begin(), leaves[0].rows.end(), 0);
  evaluate(leaves[0]);

  const int max_leaves = params.num_leaves > 1 ? params.num_leaves : std::numeric_limits<int>::max();
  while (static_cast<int>(leaves.size()) < max_leaves) {
    int pick = -1;
    for (int i = 0; i < static_cast<int>(leaves.size()); ++i) {
      if (leaves[i].split.feature < 0) continue;
      if (pick < 0 || leaves[i].split.gain > leaves[pick].split.gain ||
          (leaves[i].split.gain == leaves[pick].split.gain && leaves[i].node < leaves[pick].node))
        pick = i;
    }
    if (pick < 0) break;
    Leaf parent = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + pick);
    const int li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[parent.node];
    node.feature = parent.split.feature;
    node.threshold = parent.split.threshold;
    node.left = li;
    node.right = li + 1;
    Leaf left{li, parent.depth + 1, {}, 0, 0, {}}, right{li + 1, parent.depth + 1, {}, 0, 0, {}};
    const auto& codes = binned.codes[parent.split.feature];
    for (int r : parent.rows) (codes[r] <= parent.split.code ? left : right).rows.push_back(r);
    evaluate(left);
    evaluate(right);
    leaves.push_back(std::move(left));
    leaves.push_back(std::move(right));
  }
  for (const auto& leaf : leaves) tree.nodes[leaf.node].value = leaf_value(leaf.G, leaf.H, params.lambda);
  return tree;
}

}  // namespace xmkt::models

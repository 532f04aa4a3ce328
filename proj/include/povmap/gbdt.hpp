#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "povmap/common.hpp"

namespace povmap {

struct GbdtParams {
  int n_estimators = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_samples_leaf = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_estimators < 0) throw InputError("gbdt: n_estimators must be >= 0");
    if (max_depth < 0) throw InputError("gbdt: max_depth must be >= 0");
    if (!(learning_rate > 0) || learning_rate > 1) {
      throw InputError("gbdt: learning_rate must be in (0,1]");
    }
    if (min_samples_leaf < 1) {
      throw InputError("gbdt: min_samples_leaf must be >= 1");
    }
  }

  bool operator==(const GbdtParams&) const = default;
};

// feature < 0 marks a leaf. cover is the number of training rows routed
// through the node; TreeSHAP weighs conditional expectations with it.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1;
  int right = -1;
  double value = 0;
  double cover = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> x) const {
    int idx = 0;
    while (!nodes[idx].is_leaf()) {
      idx = x[std::size_t(nodes[idx].feature)] <= nodes[idx].threshold
                ? nodes[idx].left
                : nodes[idx].right;
    }
    return nodes[idx].value;
  }

  // Cover-weighted expectation over the training distribution.
  double expectation() const { return expectation_at(0); }

  double expectation_at(int idx) const {
    const TreeNode& node = nodes[idx];
    if (node.is_leaf()) return node.value;
    const double cl = nodes[node.left].cover;
    const double cr = nodes[node.right].cover;
    return (cl * expectation_at(node.left) + cr * expectation_at(node.right)) /
           (cl + cr);
  }
};

// Stagewise least-squares boosting of depth-limited regression trees:
// F_0 = mean(y), F_m = F_{m-1} + learning_rate * tree_m where tree_m fits the
// residuals by greedy variance-reduction splits.
struct TreeEnsemble {
  double base_value = 0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  std::size_t n_features = 0;
  GbdtParams params;

  double predict(std::span<const double> x) const {
    if (x.size() != n_features) {
      throw InputError("predict: expected " + std::to_string(n_features) +
                       " features, got " + std::to_string(x.size()));
    }
    double y = base_value;
    for (const auto& tree : trees) y += learning_rate * tree.predict(x);
    return y;
  }
};

namespace detail {

struct SplitCandidate {
  bool found = false;
  double gain = 0;
  int feature = -1;
  double threshold = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> x, std::size_t rows, std::size_t cols,
              std::span<const double> residuals, const GbdtParams& params)
      : x_(x), rows_(rows), cols_(cols), residuals_(residuals),
        params_(params) {}

  RegressionTree build() {
    std::vector<std::size_t> idx(rows_);
    std::iota(idx.begin(), idx.end(), 0);
    tree_.nodes.clear();
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  double cell(std::size_t r, std::size_t c) const { return x_[r * cols_ + c]; }

  int grow(std::vector<std::size_t>& idx, int depth) {
    const int node_id = int(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0;
    for (auto r : idx) sum += residuals_[r];
    const double mean = sum / double(idx.size());
    tree_.nodes[node_id].value = mean;
    tree_.nodes[node_id].cover = double(idx.size());

    if (depth >= params_.max_depth ||
        idx.size() < 2 * std::size_t(params_.min_samples_leaf)) {
      return node_id;
    }
    const SplitCandidate split = best_split(idx, sum);
    if (!split.found) return node_id;

    std::vector<std::size_t> left, right;
    left.reserve(idx.size());
    right.reserve(idx.size());
    for (auto r : idx) {
      (cell(r, std::size_t(split.feature)) <= split.threshold ? left : right)
          .push_back(r);
    }
    tree_.nodes[node_id].feature = split.feature;
    tree_.nodes[node_id].threshold = split.threshold;
    idx.clear();
    idx.shrink_to_fit();
    const int l = grow(left, depth + 1);
    tree_.nodes[node_id].left = l;
    const int r = grow(right, depth + 1);
    tree_.nodes[node_id].right = r;
    return node_id;
  }

  // Candidate thresholds are midpoints between consecutive distinct sorted
  // values. Ties in gain resolve to the lowest feature index, then the lowest
  // threshold, via strict improvement under ascending iteration.
  SplitCandidate best_split(const std::vector<std::size_t>& idx,
                            double total_sum) const {
    SplitCandidate best;
    const std::size_t n = idx.size();
    const std::size_t msl = std::size_t(params_.min_samples_leaf);
    std::vector<std::pair<double, double>> vals(n);  // (x, residual)
    for (std::size_t f = 0; f < cols_; ++f) {
      for (std::size_t i = 0; i < n; ++i) {
        vals[i] = {cell(idx[i], f), residuals_[idx[i]]};
      }
      // stable: equal feature values keep row order, so identical columns
      // produce bitwise identical gains and ties resolve by feature index
      std::stable_sort(vals.begin(), vals.end(),
                       [](const auto& a, const auto& b) {
                         return a.first < b.first;
                       });
      double left_sum = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += vals[i].second;
        if (vals[i].first == vals[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < msl || n_right < msl) continue;
        const double right_sum = total_sum - left_sum;
        const double gain = left_sum * left_sum / double(n_left) +
                            right_sum * right_sum / double(n_right) -
                            total_sum * total_sum / double(n);
        if (gain > best.gain && gain > 1e-12) {
          double t = vals[i].first + (vals[i + 1].first - vals[i].first) / 2;
          if (t >= vals[i + 1].first) t = vals[i].first;
          best = SplitCandidate{true, gain, int(f), t};
        }
      }
    }
    return best;
  }

  std::span<const double> x_;
  std::size_t rows_, cols_;
  std::span<const double> residuals_;
  const GbdtParams& params_;
  RegressionTree tree_;
};

}  // namespace detail

inline TreeEnsemble fit_gbdt(std::span<const double> x, std::size_t rows,
                             std::size_t cols, std::span<const double> y,
                             const GbdtParams& params) {
  params.validate();
  if (rows < 2) throw InputError("fit_gbdt: fewer than 2 samples");
  if (y.size() != rows) throw InputError("fit_gbdt: target length mismatch");

  TreeEnsemble ensemble;
  ensemble.params = params;
  ensemble.learning_rate = params.learning_rate;
  ensemble.n_features = cols;
  double sum = 0;
  for (auto v : y) sum += v;
  ensemble.base_value = sum / double(rows);

  std::vector<double> current(rows, ensemble.base_value);
  std::vector<double> residuals(rows);
  ensemble.trees.reserve(std::size_t(params.n_estimators));
  for (int m = 0; m < params.n_estimators; ++m) {
    for (std::size_t r = 0; r < rows; ++r) residuals[r] = y[r] - current[r];
    detail::TreeBuilder builder(x, rows, cols, residuals, params);
    RegressionTree tree = builder.build();
    for (std::size_t r = 0; r < rows; ++r) {
      current[r] += params.learning_rate *
                    tree.predict(std::span<const double>(x).subspan(
                        r * cols, cols));
    }
    ensemble.trees.push_back(std::move(tree));
  }
  return ensemble;
}

inline void to_json(nlohmann::json& j, const TreeEnsemble& e) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : e.trees) {
    nlohmann::json feature = nlohmann::json::array();
    nlohmann::json threshold = nlohmann::json::array();
    nlohmann::json left = nlohmann::json::array();
    nlohmann::json right = nlohmann::json::array();
    nlohmann::json value = nlohmann::json::array();
    nlohmann::json cover = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      left.push_back(node.left);
      right.push_back(node.right);
      value.push_back(node.value);
      cover.push_back(node.cover);
    }
    trees.push_back(nlohmann::json{{"feature", feature},
                                   {"threshold", threshold},
                                   {"left", left},
                                   {"right", right},
                                   {"value", value},
                                   {"cover", cover}});
  }
  j = nlohmann::json{
      {"kind", "gbdt"},
      {"base_value", e.base_value},
      {"learning_rate", e.learning_rate},
      {"n_features", e.n_features},
      {"params",
       {{"n_estimators", e.params.n_estimators},
        {"max_depth", e.params.max_depth},
        {"learning_rate", e.params.learning_rate},
        {"min_samples_leaf", e.params.min_samples_leaf},
        {"seed", e.params.seed}}},
      {"trees", trees}};
}

inline TreeEnsemble tree_ensemble_from_json(const nlohmann::json& j) {
  TreeEnsemble e;
  e.base_value = j.at("base_value").get<double>();
  e.learning_rate = j.at("learning_rate").get<double>();
  e.n_features = j.at("n_features").get<std::size_t>();
  const auto& p = j.at("params");
  e.params.n_estimators = p.at("n_estimators").get<int>();
  e.params.max_depth = p.at("max_depth").get<int>();
  e.params.learning_rate = p.at("learning_rate").get<double>();
  e.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
  e.params.seed = p.at("seed").get<std::uint64_t>();
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    const auto n = t.at("feature").size();
    tree.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      tree.nodes[i].feature = t.at("feature")[i].get<int>();
      tree.nodes[i].threshold = t.at("threshold")[i].get<double>();
      tree.nodes[i].left = t.at("left")[i].get<int>();
      tree.nodes[i].right = t.at("right")[i].get<int>();
      tree.nodes[i].value = t.at("value")[i].get<double>();
      tree.nodes[i].cover = t.at("cover")[i].get<double>();
    }
    e.trees.push_back(std::move(tree));
  }
  return e;
}

}  // namespace povmap

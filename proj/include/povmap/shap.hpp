#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "povmap/common.hpp"
#include "povmap/gbdt.hpp"

namespace povmap {

// Per-sample attribution: base_value + sum(phi) equals the model prediction.
struct ShapExplanation {
  double base_value = 0;
  std::vector<double> phi;

  double total() const {
    double s = base_value;
    for (auto v : phi) s += v;
    return s;
  }
};

namespace detail {

struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

inline void extend_path(std::vector<PathElement>& path, unsigned unique_depth,
                        double zero_fraction, double one_fraction,
                        int feature_index) {
  path[unique_depth] = PathElement{feature_index, zero_fraction, one_fraction,
                                   unique_depth == 0 ? 1.0 : 0.0};
  for (int i = int(unique_depth) - 1; i >= 0; --i) {
    path[i + 1].pweight +=
        one_fraction * path[i].pweight * (i + 1) / double(unique_depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight *
                      (unique_depth - i) / double(unique_depth + 1);
  }
}

inline void unwind_path(std::vector<PathElement>& path, unsigned unique_depth,
                        unsigned path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  for (int i = int(unique_depth) - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (unique_depth + 1) /
                        double((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction *
                                   (unique_depth - i) /
                                   double(unique_depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (unique_depth + 1) /
                        (zero_fraction * (unique_depth - i));
    }
  }
  for (unsigned i = path_index; i < unique_depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight if the extension at path_index were unwound.
inline double unwound_path_sum(const std::vector<PathElement>& path,
                               unsigned unique_depth, unsigned path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[unique_depth].pweight;
  double total = 0;
  if (one_fraction != 0) {
    for (int i = int(unique_depth) - 1; i >= 0; --i) {
      const double tmp =
          next_one_portion * (unique_depth + 1) / double((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction *
                                               (unique_depth - i) /
                                               double(unique_depth + 1);
    }
  } else {
    for (int i = int(unique_depth) - 1; i >= 0; --i) {
      total +=
          path[i].pweight * (unique_depth + 1) /
          (zero_fraction * (unique_depth - i));
    }
  }
  return total;
}

inline void tree_shap_recurse(const RegressionTree& tree,
                              std::span<const double> x,
                              std::vector<double>& phi, int node_index,
                              unsigned unique_depth,
                              std::vector<PathElement> path,
                              double parent_zero_fraction,
                              double parent_one_fraction,
                              int parent_feature_index) {
  path.resize(unique_depth + 1);
  extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
              parent_feature_index);
  const TreeNode& node = tree.nodes[std::size_t(node_index)];

  if (node.is_leaf()) {
    for (unsigned i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      phi[std::size_t(el.feature_index)] +=
          w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }

  const int hot = x[std::size_t(node.feature)] <= node.threshold ? node.left
                                                                 : node.right;
  const int cold = hot == node.left ? node.right : node.left;
  const double hot_zero_fraction =
      tree.nodes[std::size_t(hot)].cover / node.cover;
  const double cold_zero_fraction =
      tree.nodes[std::size_t(cold)].cover / node.cover;
  double incoming_zero_fraction = 1;
  double incoming_one_fraction = 1;

  // undo a previous split on this feature so it can be redone here
  unsigned path_index = 0;
  for (; path_index <= unique_depth; ++path_index) {
    if (path[path_index].feature_index == node.feature) break;
  }
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
    path.resize(unique_depth + 1);
  }

  tree_shap_recurse(tree, x, phi, hot, unique_depth + 1, path,
                    hot_zero_fraction * incoming_zero_fraction,
                    incoming_one_fraction, node.feature);
  tree_shap_recurse(tree, x, phi, cold, unique_depth + 1, path,
                    cold_zero_fraction * incoming_zero_fraction, 0.0,
                    node.feature);
}

inline void require_covers(const TreeEnsemble& ensemble) {
  for (const auto& tree : ensemble.trees) {
    for (const auto& node : tree.nodes) {
      if (!(node.cover > 0)) {
        throw ComputeError(
            "model is missing node covers; refit it before explaining");
      }
    }
  }
}

}  // namespace detail

// Path-dependent TreeSHAP: exact Shapley values of the cover-weighted
// conditional expectation game, per tree, scaled by the shrinkage and summed.
inline ShapExplanation tree_shap(const TreeEnsemble& ensemble,
                                 std::span<const double> x) {
  if (x.size() != ensemble.n_features) {
    throw InputError("tree_shap: expected " +
                     std::to_string(ensemble.n_features) + " features, got " +
                     std::to_string(x.size()));
  }
  detail::require_covers(ensemble);
  ShapExplanation out;
  out.base_value = ensemble.base_value;
  out.phi.assign(ensemble.n_features, 0.0);
  std::vector<double> tree_phi(ensemble.n_features);
  for (const auto& tree : ensemble.trees) {
    std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
    std::vector<detail::PathElement> path;
    detail::tree_shap_recurse(tree, x, tree_phi, 0, 0, path, 1.0, 1.0, -1);
    for (std::size_t j = 0; j < tree_phi.size(); ++j) {
      out.phi[j] += ensemble.learning_rate * tree_phi[j];
    }
    out.base_value += ensemble.learning_rate * tree.expectation();
  }
  return out;
}

// Conditional expectation of one tree given the features in `mask`: descent
// follows x on masked features and cover-averages both children otherwise.
inline double masked_expectation(const RegressionTree& tree,
                                 std::span<const double> x,
                                 std::uint32_t mask, int idx = 0) {
  const TreeNode& node = tree.nodes[std::size_t(idx)];
  if (node.is_leaf()) return node.value;
  if (mask & (std::uint32_t(1) << node.feature)) {
    const int next = x[std::size_t(node.feature)] <= node.threshold
                         ? node.left
                         : node.right;
    return masked_expectation(tree, x, mask, next);
  }
  const double cl = tree.nodes[std::size_t(node.left)].cover;
  const double cr = tree.nodes[std::size_t(node.right)].cover;
  return (cl * masked_expectation(tree, x, mask, node.left) +
          cr * masked_expectation(tree, x, mask, node.right)) /
         (cl + cr);
}

inline double coalition_value(const TreeEnsemble& ensemble,
                              std::span<const double> x, std::uint32_t mask) {
  double v = ensemble.base_value;
  for (const auto& tree : ensemble.trees) {
    v += ensemble.learning_rate * masked_expectation(tree, x, mask);
  }
  return v;
}

// First-principles Shapley values by full subset enumeration; the
// verification oracle for tree_shap. Limited to 15 features.
inline ShapExplanation brute_force_shap(const TreeEnsemble& ensemble,
                                        std::span<const double> x) {
  const std::size_t d = ensemble.n_features;
  if (x.size() != d) {
    throw InputError("brute_force_shap: feature dimension mismatch");
  }
  if (d > 15) {
    throw InputError("brute_force_shap: feature count " + std::to_string(d) +
                     " too large for subset enumeration (max 15)");
  }
  detail::require_covers(ensemble);
  const std::uint32_t full = d == 0 ? 0 : (std::uint32_t(1) << d) - 1;
  std::vector<double> value(std::size_t(full) + 1);
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    value[mask] = coalition_value(ensemble, x, mask);
    if (mask == full) break;
  }
  // w[s] = s! (d-s-1)! / d!
  std::vector<double> weight(d ? d : 1);
  {
    std::vector<double> factorial(d + 1, 1.0);
    for (std::size_t i = 1; i <= d; ++i) factorial[i] = factorial[i - 1] * i;
    for (std::size_t s = 0; s < d; ++s) {
      weight[s] = factorial[s] * factorial[d - s - 1] / factorial[d];
    }
  }
  ShapExplanation out;
  out.base_value = value[0];
  out.phi.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const std::uint32_t bit = std::uint32_t(1) << j;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (mask & bit) continue;
      const int s = __builtin_popcount(mask);
      out.phi[j] += weight[std::size_t(s)] * (value[mask | bit] - value[mask]);
      if (mask == full) break;
    }
  }
  return out;
}

}  // namespace povmap

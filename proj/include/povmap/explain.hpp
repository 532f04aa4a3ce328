#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "povmap/common.hpp"
#include "povmap/evaluation.hpp"
#include "povmap/features.hpp"
#include "povmap/models.hpp"
#include "povmap/shap.hpp"

namespace povmap {

struct ImportanceRow {
  std::string feature;
  double mean_abs = 0;
  double sum_abs = 0;
};

struct SummaryResult {
  double base_value = 0;
  std::vector<double> phi;                 // n x d, row-major
  std::vector<ImportanceRow> importance;   // descending by mean_abs
};

// Per-sample SHAP matrix plus the global importance ranking. mean and sum of
// |phi| rank identically; both are emitted.
inline SummaryResult shap_summary(const TreeEnsemble& ensemble,
                                  const FeatureMatrix& fm) {
  SummaryResult out;
  const std::size_t d = fm.cols;
  out.phi.assign(fm.rows * d, 0.0);
  for (std::size_t i = 0; i < fm.rows; ++i) {
    const ShapExplanation ex = tree_shap(ensemble, fm.row(i));
    out.base_value = ex.base_value;
    std::copy(ex.phi.begin(), ex.phi.end(), out.phi.begin() + i * d);
  }
  std::vector<double> sums(d, 0.0);
  for (std::size_t i = 0; i < fm.rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      sums[j] += std::abs(out.phi[i * d + j]);
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    out.importance.push_back(ImportanceRow{
        fm.column_names[j], fm.rows ? sums[j] / double(fm.rows) : 0.0,
        sums[j]});
  }
  std::stable_sort(out.importance.begin(), out.importance.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) {
                     return a.mean_abs > b.mean_abs;
                   });
  return out;
}

// Importance for the linear family: the absolute standardized coefficient,
// reported in the same table shape.
inline std::vector<ImportanceRow> coefficient_importance(
    const LinearModel& model, const std::vector<std::string>& names) {
  if (names.size() != model.coefficients.size()) {
    throw InputError("coefficient_importance: name/coefficient mismatch");
  }
  std::vector<ImportanceRow> rows;
  for (std::size_t j = 0; j < names.size(); ++j) {
    const double a = std::abs(model.coefficients[j]);
    rows.push_back(ImportanceRow{names[j], a, a});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ImportanceRow& a, const ImportanceRow& b) {
                     return a.mean_abs > b.mean_abs;
                   });
  return rows;
}

// Fraction of var(phi) explained by equal-frequency bins of x.
inline double binned_variance_ratio(std::span<const double> phi,
                                    std::span<const double> x,
                                    std::size_t bins = 64) {
  const std::size_t n = phi.size();
  if (n != x.size() || n == 0) {
    throw InputError("binned_variance_ratio: length mismatch");
  }
  const double mean = std::accumulate(phi.begin(), phi.end(), 0.0) / double(n);
  double total = 0;
  for (auto v : phi) total += (v - mean) * (v - mean);
  if (total == 0) return 0.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  const std::size_t n_bins = std::min(bins, n);
  double between = 0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t lo = b * n / n_bins;
    const std::size_t hi = (b + 1) * n / n_bins;
    if (hi == lo) continue;
    double bin_mean = 0;
    for (std::size_t i = lo; i < hi; ++i) bin_mean += phi[order[i]];
    bin_mean /= double(hi - lo);
    between += double(hi - lo) * (bin_mean - mean) * (bin_mean - mean);
  }
  return between / total;
}

struct DependenceRow {
  std::string sample_id;
  double feature_value = 0;
  double phi = 0;
  double interaction_value = 0;
};

struct DependenceResult {
  std::string feature;
  std::string interaction;
  std::vector<DependenceRow> rows;  // one per sample
};

// Scatter data for phi_j against x_j, colored by a second feature. "auto"
// picks the candidate whose equal-frequency bins explain the most variance
// of phi_j.
inline DependenceResult dependence_data(const TreeEnsemble& ensemble,
                                        const FeatureMatrix& fm,
                                        const std::string& feature,
                                        const std::string& interaction =
                                            "auto") {
  const std::size_t j = fm.column_index(feature);
  const std::size_t d = fm.cols;
  std::vector<double> phi_j(fm.rows);
  for (std::size_t i = 0; i < fm.rows; ++i) {
    const ShapExplanation ex = tree_shap(ensemble, fm.row(i));
    phi_j[i] = ex.phi[j];
  }
  std::size_t k = d;
  if (interaction == "auto") {
    double best = -1;
    for (std::size_t c = 0; c < d; ++c) {
      if (c == j) continue;
      std::vector<double> xc(fm.rows);
      for (std::size_t i = 0; i < fm.rows; ++i) xc[i] = fm.at(i, c);
      const double stat = binned_variance_ratio(phi_j, xc);
      if (stat > best) {
        best = stat;
        k = c;
      }
    }
    if (k == d) k = j;  // single-feature matrix
  } else {
    k = fm.column_index(interaction);
  }
  DependenceResult out;
  out.feature = fm.column_names[j];
  out.interaction = fm.column_names[k];
  out.rows.reserve(fm.rows);
  for (std::size_t i = 0; i < fm.rows; ++i) {
    out.rows.push_back(DependenceRow{fm.cluster_ids[i], fm.at(i, j), phi_j[i],
                                     fm.at(i, k)});
  }
  return out;
}

struct AblationRow {
  std::string feature;
  double r2_full = 0;
  double r2_ablated = 0;
  double delta = 0;  // r2_full - r2_ablated
};

// Test-time ablation: zero one feature column and re-score. The model is not
// refit. Zero-variance predictions after ablation propagate the explicit
// error.
inline AblationRow ablate_feature(const FittedModel& model,
                                  const FeatureMatrix& fm,
                                  const std::string& feature) {
  const std::size_t j = fm.column_index(feature);
  const std::vector<double> full =
      model.predict_rows(fm.values, fm.rows, fm.cols);
  std::vector<double> ablated_values = fm.values;
  for (std::size_t i = 0; i < fm.rows; ++i) {
    ablated_values[i * fm.cols + j] = 0.0;
  }
  const std::vector<double> ablated =
      model.predict_rows(ablated_values, fm.rows, fm.cols);
  AblationRow row;
  row.feature = fm.column_names[j];
  row.r2_full = pearson_r2(full, fm.targets);
  row.r2_ablated = pearson_r2(ablated, fm.targets);
  row.delta = row.r2_full - row.r2_ablated;
  return row;
}

inline std::vector<AblationRow> ablation_table(const FittedModel& model,
                                               const FeatureMatrix& fm) {
  std::vector<AblationRow> rows;
  rows.reserve(fm.cols);
  for (const auto& name : fm.column_names) {
    rows.push_back(ablate_feature(model, fm, name));
  }
  return rows;
}

}  // namespace povmap

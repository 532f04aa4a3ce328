#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "povmap/common.hpp"
#include "povmap/data_io.hpp"
#include "povmap/features.hpp"
#include "povmap/geo.hpp"
#include "povmap/models.hpp"

namespace povmap {

// Square of the sample Pearson correlation. This is NOT the coefficient of
// determination: any affine relation between the two vectors scores 1, and
// anti-correlated predictions still score positively. Constant inputs have
// no defined correlation and raise instead of silently scoring 0.
inline double pearson_r2(std::span<const double> pred,
                         std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw InputError("pearson_r2: length mismatch");
  }
  const std::size_t n = pred.size();
  if (n < 2) throw InputError("pearson_r2: need at least 2 points");
  double mp = 0, mt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(pred[i]) || !std::isfinite(truth[i])) {
      throw ComputeError("pearson_r2: non-finite input");
    }
    mp += pred[i];
    mt += truth[i];
  }
  mp /= double(n);
  mt /= double(n);
  double spp = 0, stt = 0, spt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = pred[i] - mp;
    const double dt = truth[i] - mt;
    spp += dp * dp;
    stt += dt * dt;
    spt += dp * dt;
  }
  if (spp == 0 || stt == 0) {
    throw ZeroVarianceError(
        "pearson_r2: zero variance input, correlation undefined");
  }
  return (spt * spt) / (spp * stt);
}

struct ExclusionResult {
  std::vector<std::size_t> train_indices;
  int n_excluded = 0;  // overlapping neighbors, test cluster not counted
};

// Training indices for one held-out cluster: drop the cluster itself and
// every cluster whose square neighborhood overlaps its own.
inline ExclusionResult training_exclusion(
    std::size_t test_index, const std::vector<SurveyRecord>& surveys,
    const GridSpec& spec) {
  if (test_index >= surveys.size()) {
    throw InputError("training_exclusion: test index out of range");
  }
  ExclusionResult out;
  out.train_indices.reserve(surveys.size());
  for (std::size_t j = 0; j < surveys.size(); ++j) {
    if (j == test_index) continue;
    if (neighborhoods_overlap(surveys[test_index].location,
                              surveys[j].location, spec)) {
      ++out.n_excluded;
      continue;
    }
    out.train_indices.push_back(j);
  }
  return out;
}

struct PredictionRow {
  std::string cluster_id;
  double y_true = 0;
  double y_pred = 0;
  int n_excluded = 0;
};

struct LoocvResult {
  std::vector<PredictionRow> rows;  // survey order
  double r2 = 0;
};

// Leave-one-out over a prebuilt design matrix, with spatial-overlap
// exclusion. Folds run concurrently; per-fold model seeds hang off the
// cluster id so results are independent of scheduling.
inline LoocvResult loocv_matrix(const FeatureMatrix& fm,
                                const std::vector<SurveyRecord>& surveys,
                                const GridSpec& grid, const ModelSpec& spec,
                                std::uint64_t seed = 0, int jobs = 1) {
  const std::size_t n = fm.rows;
  if (n < 3) throw InputError("loocv: need at least 3 clusters");
  if (surveys.size() != n) throw InputError("loocv: survey/matrix mismatch");

  std::vector<ExclusionResult> folds(n);
  for (std::size_t i = 0; i < n; ++i) {
    folds[i] = training_exclusion(i, surveys, grid);
  }
  // overlap exclusion must be symmetric or folds would leak unevenly
  for (std::size_t i = 0; i < n; ++i) {
    const auto excluded = [&](std::size_t a, std::size_t b) {
      const auto& t = folds[a].train_indices;
      return !std::binary_search(t.begin(), t.end(), b);
    };
    for (std::size_t j = i + 1; j < n; ++j) {
      if (excluded(i, j) != excluded(j, i)) {
        throw ComputeError("loocv: asymmetric overlap exclusion between '" +
                           surveys[i].cluster_id + "' and '" +
                           surveys[j].cluster_id + "'");
      }
    }
  }

  LoocvResult result;
  result.rows.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const auto& fold = folds[i];
    if (fold.train_indices.empty()) {
      throw ComputeError("loocv: empty training set for cluster '" +
                         surveys[i].cluster_id + "'");
    }
    for (auto j : fold.train_indices) {
      if (j == i) {
        throw ComputeError("loocv: test cluster '" + surveys[i].cluster_id +
                           "' leaked into its own training fold");
      }
    }
    std::vector<double> train_x;
    std::vector<double> train_y;
    train_x.reserve(fold.train_indices.size() * fm.cols);
    train_y.reserve(fold.train_indices.size());
    for (auto j : fold.train_indices) {
      const auto row = fm.row(j);
      train_x.insert(train_x.end(), row.begin(), row.end());
      train_y.push_back(fm.targets[j]);
    }
    const std::uint64_t fold_seed =
        derive_seed(seed, surveys[i].cluster_id);
    const FittedModel model = fit_model(spec, train_x, train_y.size(), fm.cols,
                                        train_y, fold_seed);
    result.rows[i] = PredictionRow{surveys[i].cluster_id, fm.targets[i],
                                   model.predict(fm.row(i)), fold.n_excluded};
  });

  std::vector<double> preds(n), truths(n);
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = result.rows[i].y_pred;
    truths[i] = result.rows[i].y_true;
  }
  result.r2 = pearson_r2(preds, truths);
  return result;
}

inline LoocvResult loocv(const Dataset& dataset, const FeatureScheme& scheme,
                         const ModelSpec& spec, const ClassHierarchy& hierarchy,
                         std::uint64_t seed = 0, int jobs = 1) {
  const FeatureMatrix fm = build_matrix(dataset, scheme, hierarchy);
  return loocv_matrix(fm, dataset.surveys, dataset.grid, spec, seed, jobs);
}

// The 4 feature schemes x (4 models x 2 levels) comparison table.
struct GridResult {
  std::vector<SchemeKind> scheme_rows;
  std::vector<std::pair<ModelKind, ClassLevel>> columns;
  std::vector<std::vector<double>> r2;  // [scheme][column]
  std::vector<std::pair<std::size_t, std::size_t>> top_cells;  // best 3
};

inline GridResult comparison_grid(const Dataset& dataset,
                                  const ClassHierarchy& hierarchy,
                                  double threshold, const ModelSpec& base_spec,
                                  std::uint64_t seed = 0, int jobs = 1) {
  GridResult grid;
  grid.scheme_rows = {SchemeKind::Counts, SchemeKind::ConfidenceCounts,
                      SchemeKind::SizeCounts, SchemeKind::ConfSizeCounts};
  for (ModelKind m : {ModelKind::Gbdt, ModelKind::Linear, ModelKind::Lasso,
                      ModelKind::Ridge}) {
    grid.columns.emplace_back(m, ClassLevel::Parent);
    grid.columns.emplace_back(m, ClassLevel::Child);
  }
  grid.r2.assign(grid.scheme_rows.size(),
                 std::vector<double>(grid.columns.size(), 0.0));
  for (std::size_t s = 0; s < grid.scheme_rows.size(); ++s) {
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      const FeatureScheme scheme{grid.scheme_rows[s], grid.columns[c].second,
                                 threshold};
      ModelSpec spec = base_spec;
      spec.kind = grid.columns[c].first;
      grid.r2[s][c] =
          loocv(dataset, scheme, spec, hierarchy, seed, jobs).r2;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t s = 0; s < grid.scheme_rows.size(); ++s) {
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      cells.emplace_back(s, c);
    }
  }
  std::stable_sort(cells.begin(), cells.end(),
                   [&](const auto& a, const auto& b) {
                     return grid.r2[a.first][a.second] >
                            grid.r2[b.first][b.second];
                   });
  grid.top_cells.assign(cells.begin(),
                        cells.begin() + std::min<std::size_t>(3, cells.size()));
  return grid;
}

struct SweepRow {
  double threshold = 0;
  std::vector<double> r2;           // one per requested scheme kind
  std::vector<double> mean_counts;  // per parent class, raw counts
};

struct SweepResult {
  std::vector<SchemeKind> kinds;
  std::vector<std::string> count_classes;  // parent labels
  std::vector<SweepRow> rows;
};

// Re-featurizes and re-scores the pipeline at each confidence threshold, and
// tracks how the per-class detection mix shifts with the cutoff.
inline SweepResult threshold_sweep(const Dataset& dataset,
                                   const ClassHierarchy& hierarchy,
                                   const std::vector<double>& thresholds,
                                   const std::vector<SchemeKind>& kinds,
                                   ClassLevel level, const ModelSpec& spec,
                                   std::uint64_t seed = 0, int jobs = 1) {
  if (thresholds.empty()) throw InputError("threshold_sweep: empty grid");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (thresholds[i] < 0 || thresholds[i] > 1) {
      throw InputError("threshold_sweep: threshold outside [0,1]");
    }
    if (i > 0 && thresholds[i] <= thresholds[i - 1]) {
      throw InputError("threshold_sweep: thresholds must strictly increase");
    }
  }
  if (kinds.empty()) throw InputError("threshold_sweep: no scheme kinds");
  SweepResult result;
  result.kinds = kinds;
  result.count_classes = hierarchy.parents();
  for (double t : thresholds) {
    SweepRow row;
    row.threshold = t;
    for (SchemeKind kind : kinds) {
      const FeatureScheme scheme{kind, level, t};
      row.r2.push_back(loocv(dataset, scheme, spec, hierarchy, seed, jobs).r2);
    }
    const FeatureScheme counts{SchemeKind::Counts, ClassLevel::Parent, t};
    const FeatureMatrix fm = build_matrix(dataset, counts, hierarchy);
    row.mean_counts.assign(fm.cols, 0.0);
    for (std::size_t r = 0; r < fm.rows; ++r) {
      for (std::size_t c = 0; c < fm.cols; ++c) {
        row.mean_counts[c] += fm.at(r, c);
      }
    }
    for (auto& v : row.mean_counts) v /= double(fm.rows);
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace povmap

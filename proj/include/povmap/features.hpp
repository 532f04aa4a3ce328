#pragma once

#include <span>
#include <string>
#include <vector>

#include "povmap/data_io.hpp"
#include "povmap/taxonomy.hpp"

namespace povmap {

// The four per-class weighting rules: raw counts, confidence-weighted counts,
// box-area-weighted counts, and the confidence/size concatenation (2L dims).
enum class SchemeKind { Counts, ConfidenceCounts, SizeCounts, ConfSizeCounts };

inline std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Counts: return "counts";
    case SchemeKind::ConfidenceCounts: return "conf_counts";
    case SchemeKind::SizeCounts: return "size_counts";
    case SchemeKind::ConfSizeCounts: return "conf_size_counts";
  }
  return "counts";
}

inline SchemeKind parse_scheme_kind(std::string_view text) {
  if (text == "counts") return SchemeKind::Counts;
  if (text == "conf_counts") return SchemeKind::ConfidenceCounts;
  if (text == "size_counts") return SchemeKind::SizeCounts;
  if (text == "conf_size_counts") return SchemeKind::ConfSizeCounts;
  throw InputError("unknown feature scheme '" + std::string(text) +
                   "' (expected counts|conf_counts|size_counts|"
                   "conf_size_counts)");
}

struct FeatureScheme {
  SchemeKind kind = SchemeKind::Counts;
  ClassLevel level = ClassLevel::Parent;
  double threshold = 0.6;  // detections with score < threshold are ignored

  std::size_t dimension(const ClassHierarchy& hierarchy) const {
    const std::size_t base = hierarchy.num_classes(level);
    return kind == SchemeKind::ConfSizeCounts ? 2 * base : base;
  }

  bool operator==(const FeatureScheme& o) const {
    return kind == o.kind && level == o.level && threshold == o.threshold;
  }
};

struct FeatureVector {
  std::vector<double> values;
  FeatureScheme scheme;
  std::string cluster_id;
};

inline std::vector<std::string> feature_column_names(
    const FeatureScheme& scheme, const ClassHierarchy& hierarchy) {
  const auto& labels = scheme.level == ClassLevel::Parent
                           ? hierarchy.parents()
                           : hierarchy.children();
  std::vector<std::string> names;
  names.reserve(scheme.dimension(hierarchy));
  auto push = [&](const std::string& prefix) {
    for (const auto& l : labels) names.push_back(prefix + ":" + l);
  };
  switch (scheme.kind) {
    case SchemeKind::Counts:
      push(scheme.level == ClassLevel::Parent ? "parent" : "child");
      break;
    case SchemeKind::ConfidenceCounts:
      push("conf");
      break;
    case SchemeKind::SizeCounts:
      push("size");
      break;
    case SchemeKind::ConfSizeCounts:
      push("conf");
      push("size");
      break;
  }
  return names;
}

// Per-tile weighted count vector. Below-threshold detections contribute
// nothing; at parent level, detections whose class sits in the excluded
// `None` bucket contribute nothing.
inline FeatureVector tile_vector(std::span<const DetectionRecord> detections,
                                 const FeatureScheme& scheme,
                                 const ClassHierarchy& hierarchy) {
  FeatureVector out;
  out.scheme = scheme;
  out.values.assign(scheme.dimension(hierarchy), 0.0);
  const std::size_t base = hierarchy.num_classes(scheme.level);
  for (const auto& det : detections) {
    if (det.score < scheme.threshold) continue;
    const auto idx = hierarchy.resolve(det.label, scheme.level);
    if (!idx) continue;
    switch (scheme.kind) {
      case SchemeKind::Counts:
        out.values[*idx] += 1.0;
        break;
      case SchemeKind::ConfidenceCounts:
        out.values[*idx] += det.score;
        break;
      case SchemeKind::SizeCounts:
        out.values[*idx] += det.box.w * det.box.h;
        break;
      case SchemeKind::ConfSizeCounts:
        out.values[*idx] += det.score;
        out.values[base + *idx] += det.box.w * det.box.h;
        break;
    }
  }
  if (!detections.empty()) out.cluster_id = detections[0].cluster_id;
  return out;
}

// Element-wise sum over tile vectors; absent tiles contribute zero.
inline FeatureVector cluster_vector(
    const std::vector<FeatureVector>& tile_vectors) {
  FeatureVector out;
  if (tile_vectors.empty()) return out;
  out.scheme = tile_vectors[0].scheme;
  out.cluster_id = tile_vectors[0].cluster_id;
  out.values.assign(tile_vectors[0].values.size(), 0.0);
  for (const auto& tv : tile_vectors) {
    if (!(tv.scheme == out.scheme) || tv.values.size() != out.values.size()) {
      throw InputError("cluster_vector: mixed feature schemes");
    }
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] += tv.values[i];
    }
  }
  return out;
}

// N x D design matrix in survey order, plus the poverty targets.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<double> targets;
  std::vector<std::string> cluster_ids;
  std::vector<std::string> column_names;
  FeatureScheme scheme;

  double at(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }

  // Exact column name, or a unique ":name" suffix match as a convenience.
  std::size_t column_index(std::string_view name) const {
    for (std::size_t c = 0; c < column_names.size(); ++c) {
      if (column_names[c] == name) return c;
    }
    std::size_t hit = cols;
    const std::string suffix = ":" + std::string(name);
    for (std::size_t c = 0; c < column_names.size(); ++c) {
      if (column_names[c].size() > suffix.size() &&
          column_names[c].compare(column_names[c].size() - suffix.size(),
                                  suffix.size(), suffix) == 0) {
        if (hit != cols) {
          throw InputError("feature name '" + std::string(name) +
                           "' is ambiguous");
        }
        hit = c;
      }
    }
    if (hit == cols) {
      throw InputError("unknown feature '" + std::string(name) + "'");
    }
    return hit;
  }
};

// Builds the design matrix for every surveyed cluster, in survey order.
// Clusters without detections get all-zero rows. Tile summation follows flat
// tile index order so results are bitwise reproducible.
inline FeatureMatrix build_matrix(const Dataset& dataset,
                                  const FeatureScheme& scheme,
                                  const ClassHierarchy& hierarchy) {
  FeatureMatrix fm;
  fm.scheme = scheme;
  fm.rows = dataset.size();
  fm.cols = scheme.dimension(hierarchy);
  fm.values.assign(fm.rows * fm.cols, 0.0);
  fm.column_names = feature_column_names(scheme, hierarchy);
  fm.targets.reserve(fm.rows);
  fm.cluster_ids.reserve(fm.rows);
  for (std::size_t i = 0; i < dataset.surveys.size(); ++i) {
    const auto& survey = dataset.surveys[i];
    fm.targets.push_back(survey.poverty);
    fm.cluster_ids.push_back(survey.cluster_id);
    auto it = dataset.detections.by_cluster.find(survey.cluster_id);
    if (it == dataset.detections.by_cluster.end()) continue;
    std::vector<double> acc(fm.cols, 0.0);
    for (const auto& [flat, dets] : it->second) {
      const FeatureVector tv = tile_vector(dets, scheme, hierarchy);
      for (std::size_t c = 0; c < fm.cols; ++c) acc[c] += tv.values[c];
    }
    std::copy(acc.begin(), acc.end(), fm.values.begin() + i * fm.cols);
  }
  return fm;
}

inline void save_feature_matrix(const std::string& path,
                                const FeatureMatrix& fm,
                                const std::vector<std::string>& comments) {
  std::vector<std::string> header;
  header.reserve(fm.cols + 1);
  header.push_back("cluster_id");
  for (const auto& n : fm.column_names) header.push_back(n);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(fm.rows);
  for (std::size_t r = 0; r < fm.rows; ++r) {
    std::vector<std::string> row;
    row.reserve(fm.cols + 1);
    row.push_back(fm.cluster_ids[r]);
    for (std::size_t c = 0; c < fm.cols; ++c) {
      row.push_back(format_double(fm.at(r, c)));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, comments, header, rows);
}

}  // namespace povmap

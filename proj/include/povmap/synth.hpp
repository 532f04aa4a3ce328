#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "povmap/common.hpp"
#include "povmap/data_io.hpp"
#include "povmap/geo.hpp"
#include "povmap/taxonomy.hpp"

namespace povmap {

// Ground-truth relation from per-cluster parent-class counts to the latent
// poverty score.
struct Relation {
  enum class Kind { Linear, Ratio, Threshold };
  Kind kind = Kind::Linear;
  std::map<std::string, double> weights;       // linear
  std::string numerator, denominator;          // ratio: a / (1 + b)
  std::string threshold_class;                 // threshold: 1[count > cut]
  double cutpoint = 0;

  void validate(const ClassHierarchy& hierarchy) const {
    auto check = [&](const std::string& name) {
      for (const auto& p : hierarchy.parents()) {
        if (p == name) return;
      }
      throw InputError("relation references unknown class '" + name + "'");
    };
    switch (kind) {
      case Kind::Linear:
        if (weights.empty()) throw InputError("linear relation has no weights");
        for (const auto& [name, w] : weights) check(name);
        break;
      case Kind::Ratio:
        check(numerator);
        check(denominator);
        break;
      case Kind::Threshold:
        check(threshold_class);
        break;
    }
  }

  double evaluate(std::span<const double> counts,
                  const ClassHierarchy& hierarchy) const {
    auto index = [&](const std::string& name) {
      for (std::size_t i = 0; i < hierarchy.parents().size(); ++i) {
        if (hierarchy.parents()[i] == name) return i;
      }
      throw InputError("relation references unknown class '" + name + "'");
    };
    switch (kind) {
      case Kind::Linear: {
        double y = 0;
        for (const auto& [name, w] : weights) y += w * counts[index(name)];
        return y;
      }
      case Kind::Ratio:
        return counts[index(numerator)] / (1.0 + counts[index(denominator)]);
      case Kind::Threshold:
        return counts[index(threshold_class)] > cutpoint ? 1.0 : 0.0;
    }
    return 0;
  }

  nlohmann::json to_json() const {
    switch (kind) {
      case Kind::Linear:
        return nlohmann::json{{"kind", "linear"}, {"weights", weights}};
      case Kind::Ratio:
        return nlohmann::json{{"kind", "ratio"},
                              {"numerator", numerator},
                              {"denominator", denominator}};
      case Kind::Threshold:
        return nlohmann::json{{"kind", "threshold"},
                              {"class", threshold_class},
                              {"cutpoint", cutpoint}};
    }
    return {};
  }
};

// Desk-scale dataset generator with a known relation. Detections are drawn
// per parent class (labelled with the class's generic child), scattered
// uniformly over the tile grid; each cluster gets an activity scale so the
// latent score spreads well beyond its noise. Clusters sit on a coordinate
// grid far apart unless a pair is planted to overlap.
struct SynthConfig {
  int n_clusters = 320;
  std::map<std::string, double> class_intensities;  // expected per cluster
  double score_min = 0.3, score_max = 1.0;
  std::map<std::string, std::pair<double, double>> score_overrides;
  double box_min = 4, box_max = 40;  // uniform edge length, px
  std::map<std::string, std::pair<double, double>> box_overrides;
  Relation relation;
  double noise_sigma = 0;
  std::uint64_t seed = 0;
  double cluster_spacing_deg = 0.25;  // ~27.8 km, no accidental overlap
  double base_lat = -0.5, base_lon = 30.0;
  double activity_min = 0.2, activity_max = 1.8;
  std::vector<std::pair<int, int>> overlap_pairs;
  double pair_separation_deg = 0.02;  // ~2.2 km, inside one neighborhood

  void validate(const ClassHierarchy& hierarchy, const GridSpec& grid) const {
    if (n_clusters < 1) throw InputError("synth: n_clusters must be >= 1");
    if (class_intensities.empty()) {
      throw InputError("synth: no class intensities configured");
    }
    for (const auto& [name, lambda] : class_intensities) {
      if (lambda < 0) throw InputError("synth: negative intensity");
      bool known = false;
      for (const auto& p : hierarchy.parents()) known = known || p == name;
      if (!known) {
        throw InputError("synth: intensity for unknown class '" + name + "'");
      }
      if (!hierarchy.has_child(name)) {
        throw InputError("synth: class '" + name +
                         "' has no child-level label");
      }
    }
    if (!(score_min >= 0 && score_max <= 1 && score_min <= score_max)) {
      throw InputError("synth: score range must sit inside [0,1]");
    }
    if (!(box_min > 0 && box_max >= box_min)) {
      throw InputError("synth: invalid box size range");
    }
    if (noise_sigma < 0) throw InputError("synth: negative noise sigma");
    if (!(activity_min > 0 && activity_max >= activity_min)) {
      throw InputError("synth: invalid activity range");
    }
    relation.validate(hierarchy);
    if (pair_separation_deg * kMetersPerDegree >= grid.side_meters()) {
      throw InputError(
          "synth: infeasible placement, pair separation exceeds the "
          "neighborhood side");
    }
  }
};

struct SynthResult {
  std::vector<SurveyRecord> surveys;
  DetectionStore detections;
  std::vector<double> latents;                  // before noise
  std::vector<std::vector<double>> true_counts; // n x parent classes
};

// Moves each pair's second cluster next to its first. A cluster may join at
// most one pair; anything else is an infeasible placement request.
inline void plant_overlaps(std::vector<GeoPoint>& coords,
                           const std::vector<std::pair<int, int>>& pairs,
                           double separation_deg) {
  std::vector<bool> used(coords.size(), false);
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || std::size_t(a) >= coords.size() ||
        std::size_t(b) >= coords.size()) {
      throw InputError("plant_overlaps: infeasible placement, index out of "
                       "range");
    }
    if (a == b || used[std::size_t(a)] || used[std::size_t(b)]) {
      throw InputError("plant_overlaps: infeasible placement, cluster used "
                       "twice");
    }
    used[std::size_t(a)] = used[std::size_t(b)] = true;
    coords[std::size_t(b)] =
        GeoPoint{coords[std::size_t(a)].lat + separation_deg,
                 coords[std::size_t(a)].lon};
  }
}

inline SynthResult generate(const SynthConfig& config,
                            const ClassHierarchy& hierarchy,
                            const GridSpec& grid = {}) {
  config.validate(hierarchy, grid);
  const std::size_t n = std::size_t(config.n_clusters);
  const std::size_t n_parents = hierarchy.parents().size();

  // independent streams: the noise level must not perturb the detections
  Rng activity_rng(derive_seed(config.seed, "activity"));
  Rng count_rng(derive_seed(config.seed, "counts"));
  Rng place_rng(derive_seed(config.seed, "placement"));
  Rng score_rng(derive_seed(config.seed, "scores"));
  Rng box_rng(derive_seed(config.seed, "boxes"));
  Rng noise_rng(derive_seed(config.seed, "noise"));

  std::vector<GeoPoint> coords(n);
  const int side = int(std::ceil(std::sqrt(double(n))));
  for (std::size_t i = 0; i < n; ++i) {
    coords[i] = GeoPoint{
        config.base_lat + double(int(i) / side) * config.cluster_spacing_deg,
        config.base_lon + double(int(i) % side) * config.cluster_spacing_deg};
  }
  plant_overlaps(coords, config.overlap_pairs, config.pair_separation_deg);

  SynthResult result;
  result.surveys.reserve(n);
  result.latents.reserve(n);
  result.true_counts.assign(n, std::vector<double>(n_parents, 0.0));

  int id_width = 1;
  for (std::size_t v = n; v >= 10; v /= 10) ++id_width;

  for (std::size_t i = 0; i < n; ++i) {
    std::string cid = std::to_string(i);
    cid = "c" + std::string(std::size_t(id_width) - cid.size(), '0') + cid;

    const double activity =
        activity_rng.uniform(config.activity_min, config.activity_max);
    for (const auto& [name, lambda] : config.class_intensities) {
      const auto parent_idx = hierarchy.resolve(name, ClassLevel::Parent);
      const std::int64_t count = count_rng.poisson(activity * lambda);
      result.true_counts[i][*parent_idx] += double(count);
      auto score_range = std::pair{config.score_min, config.score_max};
      if (auto it = config.score_overrides.find(name);
          it != config.score_overrides.end()) {
        score_range = it->second;
      }
      auto box_range = std::pair{config.box_min, config.box_max};
      if (auto it = config.box_overrides.find(name);
          it != config.box_overrides.end()) {
        box_range = it->second;
      }
      for (std::int64_t d = 0; d < count; ++d) {
        DetectionRecord rec;
        rec.cluster_id = cid;
        rec.tile.row = int(place_rng.uniform_int(0, grid.tiles_per_side - 1));
        rec.tile.col = int(place_rng.uniform_int(0, grid.tiles_per_side - 1));
        rec.box.w = box_rng.uniform(box_range.first, box_range.second);
        rec.box.h = box_rng.uniform(box_range.first, box_range.second);
        rec.box.x_c =
            place_rng.uniform(rec.box.w / 2, grid.tile_px - rec.box.w / 2);
        rec.box.y_c =
            place_rng.uniform(rec.box.h / 2, grid.tile_px - rec.box.h / 2);
        rec.label = name;
        rec.score = score_rng.uniform(score_range.first, score_range.second);
        result.detections.insert(std::move(rec), grid);
      }
    }
    const double latent =
        config.relation.evaluate(result.true_counts[i], hierarchy);
    const double poverty =
        std::max(0.0, latent + noise_rng.normal() * config.noise_sigma);
    result.latents.push_back(latent);
    result.surveys.push_back(SurveyRecord{cid, coords[i], poverty});
  }
  return result;
}

inline void save_ground_truth(const std::string& path,
                              const SynthConfig& config,
                              const SynthResult& result,
                              const ClassHierarchy& hierarchy,
                              const std::string& config_hash) {
  double lo = result.latents.empty() ? 0 : result.latents[0];
  double hi = lo;
  for (double v : result.latents) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t i = 0; i < result.surveys.size(); ++i) {
    nlohmann::json counts;
    for (std::size_t p = 0; p < hierarchy.parents().size(); ++p) {
      counts[hierarchy.parents()[p]] = result.true_counts[i][p];
    }
    clusters.push_back(nlohmann::json{
        {"cluster_id", result.surveys[i].cluster_id},
        {"latent", result.latents[i]},
        {"poverty", result.surveys[i].poverty},
        {"counts", counts}});
  }
  nlohmann::json j{{"config_hash", config_hash},
                   {"relation", config.relation.to_json()},
                   {"noise_sigma", config.noise_sigma},
                   {"seed", config.seed},
                   {"latent_min", lo},
                   {"latent_max", hi},
                   {"clusters", clusters}};
  std::ofstream out(path);
  if (!out) throw InputError("cannot write ground truth file '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace povmap

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "povmap/common.hpp"
#include "povmap/features.hpp"
#include "povmap/geo.hpp"
#include "povmap/models.hpp"
#include "povmap/synth.hpp"

namespace povmap {

namespace detail {

// Flat TOML-style `key = value` file: numbers, "strings", booleans, and
// [a, b, c] arrays. Dotted keys address nested settings.
inline std::map<std::string, std::string> parse_kv_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("config line " + std::to_string(line_no) +
                       ": expected key = value");
    }
    const std::string key{trim(row.substr(0, eq))};
    const std::string value{trim(row.substr(eq + 1))};
    if (key.empty()) {
      throw InputError("config line " + std::to_string(line_no) +
                       ": empty key");
    }
    kv[key] = value;
  }
  return kv;
}

inline std::string unquote(std::string_view v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

inline std::vector<std::string> parse_list(std::string_view v,
                                           std::string_view key) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw InputError("config key '" + std::string(key) +
                     "': expected [a, b, ...]");
  }
  std::vector<std::string> items;
  std::string_view body = v.substr(1, v.size() - 2);
  std::size_t start = 0;
  for (std::size_t i = 0; i <= body.size(); ++i) {
    if (i == body.size() || body[i] == ',') {
      const auto item = trim(body.substr(start, i - start));
      if (!item.empty()) items.push_back(unquote(item));
      start = i + 1;
    }
  }
  return items;
}

// "Name=value" entries inside an array, for per-class maps.
inline std::pair<std::string, double> parse_named_value(
    std::string_view item, std::string_view key) {
  const auto eq = item.find('=');
  if (eq == std::string_view::npos) {
    throw InputError("config key '" + std::string(key) +
                     "': expected \"Name=value\" entries");
  }
  return {std::string(trim(item.substr(0, eq))),
          parse_double(trim(item.substr(eq + 1)), key)};
}

}  // namespace detail

// Everything a run needs; file values are overridden by CLI flags.
struct RunConfig {
  RunConfig() {
    synth.class_intensities = {{"Building", 120},
                               {"Construction Site", 2},
                               {"Engineering Vehicle", 8},
                               {"Fixed-Wing Aircraft", 1},
                               {"Helipad", 0.5},
                               {"Maritime Vessel", 10},
                               {"Passenger-Vehicle", 60},
                               {"Railway Vehicle", 4},
                               {"Truck", 30},
                               {"Vehicle Lot", 3}};
    synth.relation.kind = Relation::Kind::Linear;
    synth.relation.weights = {
        {"Truck", 0.08}, {"Passenger-Vehicle", 0.02}, {"Building", 0.004}};
    synth.noise_sigma = 0.3;
  }

  std::string detections = "detections.jsonl";
  std::string survey = "survey.csv";
  std::string out_dir;                 // flag > config > $POVMAP_OUT > "."
  std::string hierarchy_file;          // empty: use the bundled ontology
  GridSpec grid;
  SchemeKind scheme = SchemeKind::Counts;
  ClassLevel level = ClassLevel::Parent;
  double threshold = 0.6;
  ModelKind model = ModelKind::Gbdt;
  double alpha = 0.1;
  GbdtParams gbdt;
  std::vector<double> alpha_grid;
  std::vector<int> n_estimators_grid;
  std::vector<int> max_depth_grid;
  std::vector<double> learning_rate_grid;
  bool nms = false;
  double nms_iou = 0.5;
  std::vector<double> sweep_thresholds = {0.1, 0.2, 0.3, 0.4, 0.5,
                                          0.6, 0.7, 0.8, 0.9};
  std::vector<SchemeKind> sweep_kinds = {SchemeKind::Counts};
  std::string explain_feature;         // empty: top-ranked feature
  std::string interaction = "auto";
  std::uint64_t seed = 0;
  int jobs = 1;
  SynthConfig synth;

  ModelSpec model_spec() const {
    ModelSpec spec;
    spec.kind = model;
    spec.alpha = alpha;
    spec.gbdt = gbdt;
    spec.alpha_grid = alpha_grid;
    spec.n_estimators_grid = n_estimators_grid;
    spec.max_depth_grid = max_depth_grid;
    spec.learning_rate_grid = learning_rate_grid;
    return spec;
  }

  FeatureScheme feature_scheme() const {
    return FeatureScheme{scheme, level, threshold};
  }

  std::string resolved_out_dir() const {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv("POVMAP_OUT"); env && *env) return env;
    return ".";
  }

  void apply_file(const std::string& path) {
    for (const auto& [key, raw] : detail::parse_kv_file(path)) {
      apply_key(key, raw);
    }
  }

  void apply_key(const std::string& key, const std::string& raw) {
    using detail::parse_list;
    using detail::parse_named_value;
    using detail::unquote;
    auto as_double = [&] { return parse_double(raw, key); };
    auto as_int = [&] { return int(parse_int(raw, key)); };
    auto as_bool = [&] {
      if (raw == "true") return true;
      if (raw == "false") return false;
      throw InputError("config key '" + key + "': expected true|false");
    };
    auto double_list = [&] {
      std::vector<double> out;
      for (const auto& item : parse_list(raw, key)) {
        out.push_back(parse_double(item, key));
      }
      return out;
    };
    auto int_list = [&] {
      std::vector<int> out;
      for (const auto& item : parse_list(raw, key)) {
        out.push_back(int(parse_int(item, key)));
      }
      return out;
    };
    auto named_map = [&] {
      std::map<std::string, double> out;
      for (const auto& item : parse_list(raw, key)) {
        out.insert(parse_named_value(item, key));
      }
      return out;
    };

    if (key == "detections") detections = unquote(raw);
    else if (key == "survey") survey = unquote(raw);
    else if (key == "out_dir") out_dir = unquote(raw);
    else if (key == "hierarchy") hierarchy_file = unquote(raw);
    else if (key == "grid.tiles_per_side") grid.tiles_per_side = as_int();
    else if (key == "grid.tile_px") grid.tile_px = as_int();
    else if (key == "grid.meters_per_px") grid.meters_per_px = as_double();
    else if (key == "grid.chip_px") grid.chip_px = as_int();
    else if (key == "grid.chip_overlap_px") grid.chip_overlap_px = as_int();
    else if (key == "scheme") scheme = parse_scheme_kind(unquote(raw));
    else if (key == "level") level = parse_level(unquote(raw));
    else if (key == "threshold") threshold = as_double();
    else if (key == "model") model = parse_model_kind(unquote(raw));
    else if (key == "alpha") alpha = as_double();
    else if (key == "alpha_grid") alpha_grid = double_list();
    else if (key == "gbdt.n_estimators") gbdt.n_estimators = as_int();
    else if (key == "gbdt.max_depth") gbdt.max_depth = as_int();
    else if (key == "gbdt.learning_rate") gbdt.learning_rate = as_double();
    else if (key == "gbdt.min_samples_leaf") gbdt.min_samples_leaf = as_int();
    else if (key == "gbdt.n_estimators_grid") n_estimators_grid = int_list();
    else if (key == "gbdt.max_depth_grid") max_depth_grid = int_list();
    else if (key == "gbdt.learning_rate_grid") learning_rate_grid = double_list();
    else if (key == "nms") nms = as_bool();
    else if (key == "nms_iou") nms_iou = as_double();
    else if (key == "sweep.thresholds") sweep_thresholds = double_list();
    else if (key == "sweep.kinds") {
      sweep_kinds.clear();
      for (const auto& item : parse_list(raw, key)) {
        sweep_kinds.push_back(parse_scheme_kind(item));
      }
    } else if (key == "explain.feature") explain_feature = unquote(raw);
    else if (key == "explain.interaction") interaction = unquote(raw);
    else if (key == "seed") seed = std::uint64_t(parse_int(raw, key));
    else if (key == "jobs") jobs = as_int();
    else if (key == "synth.n_clusters") synth.n_clusters = as_int();
    else if (key == "synth.intensities") synth.class_intensities = named_map();
    else if (key == "synth.score_min") synth.score_min = as_double();
    else if (key == "synth.score_max") synth.score_max = as_double();
    else if (key == "synth.box_min") synth.box_min = as_double();
    else if (key == "synth.box_max") synth.box_max = as_double();
    else if (key == "synth.relation") {
      const auto kind = unquote(raw);
      if (kind == "linear") synth.relation.kind = Relation::Kind::Linear;
      else if (kind == "ratio") synth.relation.kind = Relation::Kind::Ratio;
      else if (kind == "threshold") {
        synth.relation.kind = Relation::Kind::Threshold;
      } else {
        throw InputError("config key 'synth.relation': expected "
                         "linear|ratio|threshold");
      }
    } else if (key == "synth.weights") synth.relation.weights = named_map();
    else if (key == "synth.ratio_numerator") {
      synth.relation.numerator = unquote(raw);
    } else if (key == "synth.ratio_denominator") {
      synth.relation.denominator = unquote(raw);
    } else if (key == "synth.threshold_class") {
      synth.relation.threshold_class = unquote(raw);
    } else if (key == "synth.cutpoint") synth.relation.cutpoint = as_double();
    else if (key == "synth.noise_sigma") synth.noise_sigma = as_double();
    else if (key == "synth.spacing_deg") {
      synth.cluster_spacing_deg = as_double();
    } else if (key == "synth.base_lat") synth.base_lat = as_double();
    else if (key == "synth.base_lon") synth.base_lon = as_double();
    else if (key == "synth.activity_min") synth.activity_min = as_double();
    else if (key == "synth.activity_max") synth.activity_max = as_double();
    else if (key == "synth.overlap_pairs") {
      synth.overlap_pairs.clear();
      for (const auto& item : parse_list(raw, key)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
          throw InputError("config key 'synth.overlap_pairs': expected "
                           "\"i-j\" entries");
        }
        synth.overlap_pairs.emplace_back(
            int(parse_int(trim(std::string_view(item).substr(0, dash)), key)),
            int(parse_int(trim(std::string_view(item).substr(dash + 1)),
                          key)));
      }
    } else if (key == "synth.pair_separation_deg") {
      synth.pair_separation_deg = as_double();
    } else {
      throw InputError("unknown config key '" + key + "'");
    }
  }

  // Canonical serialization of every semantic setting. Paths are excluded so
  // a rerun into a different directory hashes identically.
  std::string canonical() const {
    std::ostringstream s;
    s << "grid=" << grid.tiles_per_side << "," << grid.tile_px << ","
      << format_double(grid.meters_per_px) << "," << grid.chip_px << ","
      << grid.chip_overlap_px << ";scheme=" << to_string(scheme)
      << ";level=" << to_string(level)
      << ";threshold=" << format_double(threshold)
      << ";model=" << to_string(model) << ";alpha=" << format_double(alpha)
      << ";gbdt=" << gbdt.n_estimators << "," << gbdt.max_depth << ","
      << format_double(gbdt.learning_rate) << "," << gbdt.min_samples_leaf
      << ";alpha_grid=";
    for (auto v : alpha_grid) s << format_double(v) << ",";
    s << ";trees_grid=";
    for (auto v : n_estimators_grid) s << v << ",";
    s << ";depth_grid=";
    for (auto v : max_depth_grid) s << v << ",";
    s << ";lr_grid=";
    for (auto v : learning_rate_grid) s << format_double(v) << ",";
    s << ";nms=" << (nms ? 1 : 0) << "," << format_double(nms_iou)
      << ";sweep=";
    for (auto v : sweep_thresholds) s << format_double(v) << ",";
    s << "|";
    for (auto k : sweep_kinds) s << to_string(k) << ",";
    s << ";explain=" << explain_feature << "," << interaction
      << ";seed=" << seed << ";synth=" << synth.n_clusters << "|";
    for (const auto& [name, v] : synth.class_intensities) {
      s << name << "=" << format_double(v) << ",";
    }
    s << "|" << format_double(synth.score_min) << ","
      << format_double(synth.score_max) << ","
      << format_double(synth.box_min) << "," << format_double(synth.box_max)
      << "|" << synth.relation.to_json().dump() << "|"
      << format_double(synth.noise_sigma) << "|"
      << format_double(synth.cluster_spacing_deg) << ","
      << format_double(synth.base_lat) << ","
      << format_double(synth.base_lon) << ","
      << format_double(synth.activity_min) << ","
      << format_double(synth.activity_max) << "|";
    for (const auto& [a, b] : synth.overlap_pairs) s << a << "-" << b << ",";
    s << "|" << format_double(synth.pair_separation_deg);
    return s.str();
  }

  std::string config_hash() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
  }
};

}  // namespace povmap

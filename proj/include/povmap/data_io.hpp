#pragma once

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "povmap/common.hpp"
#include "povmap/geo.hpp"
#include "povmap/taxonomy.hpp"

namespace povmap {

// One detected object in one tile of one cluster neighborhood. Boxes are in
// tile-frame pixels; labels are child-level class names.
struct DetectionRecord {
  std::string cluster_id;
  TileIndex tile;
  BoundingBox box;
  std::string label;
  double score = 0;

  bool operator==(const DetectionRecord& o) const {
    return cluster_id == o.cluster_id && tile == o.tile &&
           box.x_c == o.box.x_c && box.y_c == o.box.y_c && box.w == o.box.w &&
           box.h == o.box.h && label == o.label && score == o.score;
  }
};

struct SurveyRecord {
  std::string cluster_id;
  GeoPoint location;
  double poverty = 0;  // per-capita daily consumption, dollars
};

// Detections grouped by cluster, then by flat tile index. Ordered maps keep
// iteration (and therefore downstream summation) deterministic.
struct DetectionStore {
  std::map<std::string, std::map<int, std::vector<DetectionRecord>>>
      by_cluster;
  std::size_t loaded = 0;
  std::size_t dropped = 0;  // boxes clamped to zero area

  void insert(DetectionRecord rec, const GridSpec& spec) {
    const int flat = rec.tile.flat(spec);
    by_cluster[rec.cluster_id][flat].push_back(std::move(rec));
    ++loaded;
  }

  std::size_t total() const { return loaded; }
};

struct Dataset {
  std::vector<SurveyRecord> surveys;
  DetectionStore detections;
  GridSpec grid;

  std::size_t size() const { return surveys.size(); }

  static Dataset build(std::vector<SurveyRecord> surveys,
                       DetectionStore detections, GridSpec grid = {}) {
    std::set<std::string> known;
    for (const auto& s : surveys) known.insert(s.cluster_id);
    for (const auto& [cid, tiles] : detections.by_cluster) {
      if (!known.count(cid)) {
        throw InputError("detections reference cluster '" + cid +
                         "' absent from the survey");
      }
    }
    return Dataset{std::move(surveys), std::move(detections), grid};
  }
};

namespace detail {

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.emplace_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

inline void require_field(const nlohmann::json& obj, const char* key,
                          std::size_t line_no) {
  if (!obj.contains(key)) {
    throw InputError("detections line " + std::to_string(line_no) +
                     ": missing field '" + std::string(key) + "'");
  }
}

}  // namespace detail

// detections.jsonl: one object per line with fields cluster_id, row, col,
// x_c, y_c, w, h, label, score. Lines starting with '#' are ignored (used
// for provenance comments). Hard schema violations fail fast with the line
// number; boxes that clamp to zero area inside the tile are dropped and
// counted.
inline DetectionStore load_detections(const std::string& path,
                                      const ClassHierarchy& hierarchy,
                                      const GridSpec& spec = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open detections file '" + path + "'");
  DetectionStore store;
  std::string line;
  std::size_t line_no = 0;
  std::size_t records_seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    ++records_seen;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(row);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("detections line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    for (const char* key :
         {"cluster_id", "row", "col", "x_c", "y_c", "w", "h", "label",
          "score"}) {
      detail::require_field(obj, key, line_no);
    }
    DetectionRecord rec;
    try {
      rec.cluster_id = obj.at("cluster_id").get<std::string>();
      rec.tile.row = obj.at("row").get<int>();
      rec.tile.col = obj.at("col").get<int>();
      rec.box = BoundingBox{obj.at("x_c").get<double>(),
                            obj.at("y_c").get<double>(),
                            obj.at("w").get<double>(),
                            obj.at("h").get<double>()};
      rec.label = obj.at("label").get<std::string>();
      rec.score = obj.at("score").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError("detections line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (!(rec.score >= 0.0 && rec.score <= 1.0)) {
      throw InputError("detections line " + std::to_string(line_no) +
                       ": score " + format_double(rec.score) +
                       " outside [0,1]");
    }
    if (!hierarchy.has_child(rec.label)) {
      throw InputError("detections line " + std::to_string(line_no) +
                       ": unknown class label '" + rec.label + "'");
    }
    rec.label = std::string(trim(rec.label));
    if (!rec.tile.in_range(spec)) {
      throw InputError("detections line " + std::to_string(line_no) +
                       ": tile index (" + std::to_string(rec.tile.row) + "," +
                       std::to_string(rec.tile.col) + ") out of range");
    }
    if (!(rec.box.w > 0) || !(rec.box.h > 0)) {
      throw InputError("detections line " + std::to_string(line_no) +
                       ": non-positive box size");
    }
    auto clamped = clamp_to_tile(rec.box, spec);
    if (!clamped) {
      ++store.dropped;
      continue;
    }
    rec.box = *clamped;
    store.insert(std::move(rec), spec);
  }
  if (records_seen == 0) {
    std::cerr << "warning: detections file '" << path
              << "' contains no records\n";
  }
  return store;
}

inline void save_detections(const std::string& path,
                            const DetectionStore& store,
                            const std::vector<std::string>& comments = {}) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write detections file '" + path + "'");
  for (const auto& c : comments) out << "# " << c << "\n";
  for (const auto& [cid, tiles] : store.by_cluster) {
    for (const auto& [flat, dets] : tiles) {
      for (const auto& rec : dets) {
        nlohmann::json obj{
            {"cluster_id", rec.cluster_id}, {"row", rec.tile.row},
            {"col", rec.tile.col},          {"x_c", rec.box.x_c},
            {"y_c", rec.box.y_c},           {"w", rec.box.w},
            {"h", rec.box.h},               {"label", rec.label},
            {"score", rec.score}};
        out << obj.dump() << "\n";
      }
    }
  }
}

// survey.csv with header cluster_id,lat,lon,poverty. '#' comment lines are
// skipped before the header.
inline std::vector<SurveyRecord> load_survey(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open survey file '" + path + "'");
  std::vector<SurveyRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    if (!saw_header) {
      if (row != "cluster_id,lat,lon,poverty") {
        throw InputError("survey line " + std::to_string(line_no) +
                         ": expected header cluster_id,lat,lon,poverty");
      }
      saw_header = true;
      continue;
    }
    const auto fields = detail::split_csv(row);
    if (fields.size() != 4) {
      throw InputError("survey line " + std::to_string(line_no) +
                       ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    }
    SurveyRecord rec;
    rec.cluster_id = fields[0];
    rec.location.lat = parse_double(fields[1], "lat");
    rec.location.lon = parse_double(fields[2], "lon");
    rec.poverty = parse_double(fields[3], "poverty");
    if (rec.cluster_id.empty()) {
      throw InputError("survey line " + std::to_string(line_no) +
                       ": empty cluster_id");
    }
    if (!seen.insert(rec.cluster_id).second) {
      throw InputError("survey line " + std::to_string(line_no) +
                       ": duplicate cluster '" + rec.cluster_id + "'");
    }
    if (!rec.location.valid()) {
      throw InputError("survey line " + std::to_string(line_no) +
                       ": coordinates out of range");
    }
    if (!(rec.poverty >= 0)) {
      throw InputError("survey line " + std::to_string(line_no) +
                       ": negative poverty score");
    }
    records.push_back(std::move(rec));
  }
  if (!saw_header) {
    throw InputError("survey file '" + path + "' has no header row");
  }
  return records;
}

inline void save_survey(const std::string& path,
                        const std::vector<SurveyRecord>& records,
                        const std::vector<std::string>& comments = {}) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write survey file '" + path + "'");
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "cluster_id,lat,lon,poverty\n";
  for (const auto& rec : records) {
    out << rec.cluster_id << "," << format_double(rec.location.lat) << ","
        << format_double(rec.location.lon) << ","
        << format_double(rec.poverty) << "\n";
  }
}

// Optional tile-level class-wise non-maximum suppression for duplicates that
// detectors emit where chips overlap. Off by default; duplicates are part of
// the default feature definition.
inline std::size_t apply_nms(DetectionStore& store, double iou_threshold) {
  std::size_t suppressed = 0;
  for (auto& [cid, tiles] : store.by_cluster) {
    for (auto& [flat, dets] : tiles) {
      std::vector<std::size_t> order(dets.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return dets[a].score > dets[b].score;
                       });
      std::vector<bool> keep(dets.size(), true);
      for (std::size_t a = 0; a < order.size(); ++a) {
        if (!keep[order[a]]) continue;
        for (std::size_t b = a + 1; b < order.size(); ++b) {
          if (!keep[order[b]]) continue;
          if (dets[order[a]].label != dets[order[b]].label) continue;
          if (box_iou(dets[order[a]].box, dets[order[b]].box) >=
              iou_threshold) {
            keep[order[b]] = false;
            ++suppressed;
          }
        }
      }
      std::vector<DetectionRecord> kept;
      kept.reserve(dets.size());
      for (std::size_t i = 0; i < dets.size(); ++i) {
        if (keep[i]) kept.push_back(std::move(dets[i]));
      }
      dets = std::move(kept);
    }
  }
  store.loaded -= suppressed;
  return suppressed;
}

// Generic CSV emitter used for analysis outputs. Fields must not contain
// commas or newlines.
inline void write_csv(const std::string& path,
                      const std::vector<std::string>& comments,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  for (const auto& c : comments) out << "# " << c << "\n";
  auto emit = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].find_first_of(",\n") != std::string::npos) {
        throw InputError("CSV field '" + fields[i] + "' contains a separator");
      }
      out << (i ? "," : "") << fields[i];
    }
    out << "\n";
  };
  emit(header);
  for (const auto& r : rows) emit(r);
}

}  // namespace povmap

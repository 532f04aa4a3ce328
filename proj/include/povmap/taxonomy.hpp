#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "povmap/common.hpp"

namespace povmap {

enum class ClassLevel { Parent, Child };

inline std::string to_string(ClassLevel level) {
  return level == ClassLevel::Parent ? "parent" : "child";
}

inline ClassLevel parse_level(std::string_view text) {
  if (text == "parent") return ClassLevel::Parent;
  if (text == "child") return ClassLevel::Child;
  throw InputError("unknown class level '" + std::string(text) +
                   "' (expected parent|child)");
}

// The bundled xView ontology: 60 detector classes grouped under 10 parent
// classes plus an excluded `None` bucket. Helipad, Construction Site and
// Vehicle Lot stand as parent classes of their own; the generic class of each
// group doubles as its own child. `None` children are counted at child level
// but contribute to no parent-level dimension.
inline const char* builtin_hierarchy_definition() {
  return R"(child,parent
Fixed-Wing Aircraft,Fixed-Wing Aircraft
Small Aircraft,Fixed-Wing Aircraft
Cargo,Fixed-Wing Aircraft
Passenger-Vehicle,Passenger-Vehicle
Small Car,Passenger-Vehicle
Bus,Passenger-Vehicle
Truck,Truck
Pickup Truck,Truck
Utility Truck,Truck
Cargo Truck,Truck
Truck w/ Box,Truck
Truck Tractor,Truck
Trailer,Truck
Truck w/ Flatbed,Truck
Truck w/ Liquid,Truck
Railway Vehicle,Railway Vehicle
Passenger Car,Railway Vehicle
Cargo Car,Railway Vehicle
Flat Car,Railway Vehicle
Tank Car,Railway Vehicle
Locomotive,Railway Vehicle
Maritime Vessel,Maritime Vessel
Motoboat,Maritime Vessel
Sailboat,Maritime Vessel
Tugboat,Maritime Vessel
Barge,Maritime Vessel
Fishing Vessel,Maritime Vessel
Ferry,Maritime Vessel
Yacht,Maritime Vessel
Container Ship,Maritime Vessel
Oil Tanker,Maritime Vessel
Engineering Vehicle,Engineering Vehicle
Tower Crane,Engineering Vehicle
Container Crane,Engineering Vehicle
Reach Stacker,Engineering Vehicle
Straddle Carrier,Engineering Vehicle
Mobile Crane,Engineering Vehicle
Dump Truck,Engineering Vehicle
Haul Truck,Engineering Vehicle
Scraper/Tractor,Engineering Vehicle
Front Loader,Engineering Vehicle
Excavator,Engineering Vehicle
Cement Mixer,Engineering Vehicle
Ground Grader,Engineering Vehicle
Crane Truck,Engineering Vehicle
Building,Building
Hut/Tent,Building
Shed,Building
Aircraft Hangar,Building
Damaged Building,Building
Facility,Building
Helipad,Helipad
Construction Site,Construction Site
Vehicle Lot,Vehicle Lot
Pylon,None
Shipping Container,None
Shipping Container Lot,None
Storage Tank,None
Tower Structure,None
Helicopter,None
)";
}

inline constexpr std::size_t kParentClassCount = 10;
inline constexpr std::size_t kChildClassCount = 60;

// Immutable after construction; safe to share across threads.
class ClassHierarchy {
 public:
  static ClassHierarchy from_definition(std::string_view text) {
    ClassHierarchy h;
    std::vector<std::string> parent_order;
    std::unordered_map<std::string, std::size_t> parent_index;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view row = trim(line);
      if (row.empty() || row.front() == '#') continue;
      if (!saw_header) {
        if (row != "child,parent") {
          throw InputError("hierarchy definition line " +
                           std::to_string(line_no) +
                           ": expected header 'child,parent'");
        }
        saw_header = true;
        continue;
      }
      const auto comma = row.find(',');
      if (comma == std::string_view::npos) {
        throw InputError("hierarchy definition line " +
                         std::to_string(line_no) + ": expected child,parent");
      }
      const std::string child{trim(row.substr(0, comma))};
      const std::string parent{trim(row.substr(comma + 1))};
      if (child.empty() || parent.empty()) {
        throw InputError("hierarchy definition line " +
                         std::to_string(line_no) + ": empty label");
      }
      if (h.child_index_.count(child)) {
        throw InputError("hierarchy definition: duplicate child label '" +
                         child + "'");
      }
      std::optional<std::size_t> pidx;
      if (parent != "None") {
        auto it = parent_index.find(parent);
        if (it == parent_index.end()) {
          parent_index.emplace(parent, parent_order.size());
          pidx = parent_order.size();
          parent_order.push_back(parent);
        } else {
          pidx = it->second;
        }
      }
      h.child_index_.emplace(child, h.children_.size());
      h.children_.push_back(child);
      h.child_parent_.push_back(pidx);
    }
    h.parents_ = std::move(parent_order);
    if (h.parents_.size() != kParentClassCount ||
        h.children_.size() != kChildClassCount) {
      throw InputError(
          "hierarchy definition: wrong class counts (got " +
          std::to_string(h.parents_.size()) + " parents, " +
          std::to_string(h.children_.size()) + " children; expected " +
          std::to_string(kParentClassCount) + "/" +
          std::to_string(kChildClassCount) + ")");
    }
    return h;
  }

  static ClassHierarchy from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open hierarchy file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_definition(buf.str());
  }

  static const ClassHierarchy& builtin() {
    static const ClassHierarchy h =
        from_definition(builtin_hierarchy_definition());
    return h;
  }

  const std::vector<std::string>& parents() const { return parents_; }
  const std::vector<std::string>& children() const { return children_; }

  std::size_t num_classes(ClassLevel level) const {
    return level == ClassLevel::Parent ? parents_.size() : children_.size();
  }

  std::size_t child_index(std::string_view label) const {
    auto it = child_index_.find(std::string(trim(label)));
    if (it == child_index_.end()) {
      throw InputError("unknown class label '" + std::string(label) + "'");
    }
    return it->second;
  }

  bool has_child(std::string_view label) const {
    return child_index_.count(std::string(trim(label))) > 0;
  }

  // Feature index of `label` at the requested level. nullopt marks the
  // excluded `None` bucket (parent level only).
  std::optional<std::size_t> resolve(std::string_view label,
                                     ClassLevel level) const {
    const std::size_t ci = child_index(label);
    if (level == ClassLevel::Child) return ci;
    return child_parent_[ci];
  }

  std::optional<std::size_t> parent_of(std::size_t child_idx) const {
    return child_parent_.at(child_idx);
  }

  std::vector<std::size_t> children_of(std::size_t parent_idx) const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < children_.size(); ++c) {
      if (child_parent_[c] && *child_parent_[c] == parent_idx)
        out.push_back(c);
    }
    return out;
  }

 private:
  std::vector<std::string> parents_;
  std::vector<std::string> children_;
  std::vector<std::optional<std::size_t>> child_parent_;
  std::unordered_map<std::string, std::size_t> child_index_;
};

}  // namespace povmap

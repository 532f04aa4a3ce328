#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "povmap/taxonomy.hpp"

using namespace povmap;

TEST_CASE("builtin hierarchy has the published shape") {
  const auto& h = ClassHierarchy::builtin();
  REQUIRE(h.num_classes(ClassLevel::Parent) == 10);
  REQUIRE(h.num_classes(ClassLevel::Child) == 60);
  const std::vector<std::string> expected_parents{
      "Fixed-Wing Aircraft", "Passenger-Vehicle", "Truck",
      "Railway Vehicle",     "Maritime Vessel",   "Engineering Vehicle",
      "Building",            "Helipad",           "Construction Site",
      "Vehicle Lot"};
  REQUIRE(h.parents() == expected_parents);
}

TEST_CASE("resolve maps children to their parent dimension") {
  const auto& h = ClassHierarchy::builtin();
  const auto truck = h.resolve("Truck", ClassLevel::Parent);
  REQUIRE(h.resolve("Pickup Truck", ClassLevel::Parent) == truck);
  REQUIRE(*h.resolve("Building", ClassLevel::Parent) == 6);
  REQUIRE_FALSE(h.resolve("Shipping Container", ClassLevel::Parent));
}

TEST_CASE("None-bucket children exist at child level only") {
  const auto& h = ClassHierarchy::builtin();
  REQUIRE(h.resolve("Pylon", ClassLevel::Child).has_value());
  REQUIRE_FALSE(h.resolve("Pylon", ClassLevel::Parent));
  std::size_t excluded = 0;
  for (const auto& child : h.children()) {
    if (!h.resolve(child, ClassLevel::Parent)) ++excluded;
  }
  REQUIRE(excluded == 6);
}

TEST_CASE("child indices are stable and unique") {
  const auto& h = ClassHierarchy::builtin();
  std::vector<bool> seen(60, false);
  for (const auto& child : h.children()) {
    const auto idx = *h.resolve(child, ClassLevel::Child);
    REQUIRE_FALSE(seen[idx]);
    seen[idx] = true;
  }
  REQUIRE(h.children()[*h.resolve("Pickup Truck", ClassLevel::Child)] ==
          "Pickup Truck");
}

TEST_CASE("labels are trimmed but otherwise exact") {
  const auto& h = ClassHierarchy::builtin();
  REQUIRE(h.resolve("  Truck \t", ClassLevel::Child) ==
          h.resolve("Truck", ClassLevel::Child));
  REQUIRE_THROWS_AS(h.resolve("truck", ClassLevel::Child), InputError);
  REQUIRE_THROWS_AS(h.resolve("Lorry", ClassLevel::Parent), InputError);
}

TEST_CASE("definition with a missing child is rejected") {
  std::string text = builtin_hierarchy_definition();
  const auto pos = text.find("Pickup Truck,Truck\n");
  REQUIRE(pos != std::string::npos);
  text.erase(pos, std::string("Pickup Truck,Truck\n").size());
  REQUIRE_THROWS_WITH(ClassHierarchy::from_definition(text),
                      Catch::Matchers::ContainsSubstring("wrong class counts"));
}

TEST_CASE("duplicate child labels are rejected") {
  std::string text = builtin_hierarchy_definition();
  text += "Pickup Truck,Truck\n";
  REQUIRE_THROWS_WITH(ClassHierarchy::from_definition(text),
                      Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("malformed definitions are rejected") {
  REQUIRE_THROWS_AS(ClassHierarchy::from_definition("child,parent\noops\n"),
                    InputError);
  REQUIRE_THROWS_AS(ClassHierarchy::from_definition("wrong,header\n"),
                    InputError);
}

TEST_CASE("hierarchies load from definition files") {
  test_helpers::TempDir dir;
  const auto path = dir.file("classes.csv");
  test_helpers::write_file(path, builtin_hierarchy_definition());
  const auto h = ClassHierarchy::from_file(path);
  REQUIRE(h.parents() == ClassHierarchy::builtin().parents());
  REQUIRE(h.children() == ClassHierarchy::builtin().children());
  REQUIRE_THROWS_AS(ClassHierarchy::from_file(dir.file("missing.csv")),
                    InputError);
}

TEST_CASE("children_of inverts the child-to-parent mapping") {
  const auto& h = ClassHierarchy::builtin();
  for (std::size_t p = 0; p < h.parents().size(); ++p) {
    for (auto c : h.children_of(p)) {
      REQUIRE(*h.parent_of(c) == p);
    }
  }
  const auto truck_children =
      h.children_of(*h.resolve("Truck", ClassLevel::Parent));
  REQUIRE(truck_children.size() == 9);
}

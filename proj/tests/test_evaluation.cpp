#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "povmap/evaluation.hpp"
#include "povmap/synth.hpp"

using namespace povmap;

namespace {

Dataset synth_dataset(SynthConfig config) {
  const auto result = generate(config, ClassHierarchy::builtin());
  return Dataset::build(result.surveys, result.detections);
}

SynthConfig small_linear(std::uint64_t seed, int n = 60) {
  SynthConfig sc;
  sc.n_clusters = n;
  sc.seed = seed;
  sc.class_intensities = {{"Truck", 30},
                          {"Building", 120},
                          {"Passenger-Vehicle", 60},
                          {"Maritime Vessel", 10}};
  sc.relation.kind = Relation::Kind::Linear;
  sc.relation.weights = {{"Truck", 0.08},
                         {"Passenger-Vehicle", 0.02},
                         {"Building", 0.004}};
  sc.noise_sigma = 0.05;
  return sc;
}

}  // namespace

TEST_CASE("pearson r2 of identical vectors is one") {
  const std::vector<double> y{1, 2, 3, 4, 5};
  REQUIRE(pearson_r2(y, y) == 1.0);
}

TEST_CASE("pearson r2 is invariant under affine maps") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<double> truth(50), pred(50);
  for (std::size_t i = 0; i < 50; ++i) {
    truth[i] = u(rng);
    pred[i] = truth[i] + 0.3 * u(rng);
  }
  const double base = pearson_r2(pred, truth);
  for (double a : {2.0, -1.5, 0.01}) {
    for (double b : {0.0, 10.0, -3.0}) {
      std::vector<double> mapped(50);
      for (std::size_t i = 0; i < 50; ++i) mapped[i] = a * pred[i] + b;
      REQUIRE_THAT(pearson_r2(mapped, truth),
                   Catch::Matchers::WithinAbs(base, 1e-12));
    }
  }
  // exact affine relation scores a perfect 1
  std::vector<double> affine(50);
  for (std::size_t i = 0; i < 50; ++i) affine[i] = 3.0 * truth[i] + 2.0;
  REQUIRE_THAT(pearson_r2(affine, truth),
               Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("pearson r2 of an orthogonalized vector is zero") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 64;
  std::vector<double> truth(n), other(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = u(rng);
    other[i] = u(rng);
  }
  // project out the truth component (after centering both)
  double mt = 0, mo = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += truth[i];
    mo += other[i];
  }
  mt /= double(n);
  mo /= double(n);
  double dot = 0, tt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += (other[i] - mo) * (truth[i] - mt);
    tt += (truth[i] - mt) * (truth[i] - mt);
  }
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = (other[i] - mo) - dot / tt * (truth[i] - mt);
  }
  REQUIRE(pearson_r2(resid, truth) < 1e-12);
}

TEST_CASE("pearson r2 is symmetric in its arguments") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<double> a(30), b(30);
  for (std::size_t i = 0; i < 30; ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  REQUIRE_THAT(pearson_r2(a, b), Catch::Matchers::WithinAbs(pearson_r2(b, a),
                                                            1e-15));
}

TEST_CASE("zero variance raises the explicit error") {
  const std::vector<double> flat{2, 2, 2, 2};
  const std::vector<double> varying{1, 2, 3, 4};
  REQUIRE_THROWS_AS(pearson_r2(flat, varying), ZeroVarianceError);
  REQUIRE_THROWS_AS(pearson_r2(varying, flat), ZeroVarianceError);
  REQUIRE_THROWS_AS(pearson_r2(std::vector<double>{1},
                               std::vector<double>{1}),
                    InputError);
}

TEST_CASE("training exclusion removes the test cluster and its neighbors") {
  std::vector<SurveyRecord> surveys;
  for (int i = 0; i < 10; ++i) {
    surveys.push_back(
        {"c" + std::to_string(i), GeoPoint{0.25 * i, 32.0}, 1.0});
  }
  const GridSpec grid;
  // all far apart: exactly the test point leaves
  auto fold = training_exclusion(4, surveys, grid);
  REQUIRE(fold.train_indices.size() == 9);
  REQUIRE(fold.n_excluded == 0);
  for (auto j : fold.train_indices) REQUIRE(j != 4);

  // one 5.6 km neighbor also leaves
  surveys[5].location = GeoPoint{0.25 * 4 + 0.05, 32.0};
  fold = training_exclusion(4, surveys, grid);
  REQUIRE(fold.train_indices.size() == 8);
  REQUIRE(fold.n_excluded == 1);
}

TEST_CASE("loocv recovers a linear relation on synthetic data") {
  const auto ds = synth_dataset(small_linear(101));
  ModelSpec spec;
  spec.kind = ModelKind::Linear;
  const auto res = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0},
                         spec, ClassHierarchy::builtin(), 0, 2);
  REQUIRE(res.r2 >= 0.95);
  REQUIRE(res.rows.size() == ds.size());
  for (const auto& row : res.rows) REQUIRE(row.n_excluded == 0);
}

TEST_CASE("permuted targets destroy the score") {
  auto ds = synth_dataset(small_linear(103, 160));
  std::mt19937_64 rng(9);
  std::vector<double> targets;
  for (const auto& s : ds.surveys) targets.push_back(s.poverty);
  std::shuffle(targets.begin(), targets.end(), rng);
  for (std::size_t i = 0; i < ds.surveys.size(); ++i) {
    ds.surveys[i].poverty = targets[i];
  }
  ModelSpec spec;
  spec.kind = ModelKind::Linear;
  const auto res = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0},
                         spec, ClassHierarchy::builtin(), 0, 2);
  REQUIRE(res.r2 < 0.1);
}

TEST_CASE("degenerate folds surface the zero-variance error") {
  std::vector<SurveyRecord> surveys{{"a", GeoPoint{0, 30}, 1.0},
                                    {"b", GeoPoint{1, 31}, 1.0},
                                    {"c", GeoPoint{2, 32}, 1.0}};
  auto ds = Dataset::build(surveys, DetectionStore{});
  ModelSpec spec;
  spec.kind = ModelKind::Gbdt;
  spec.gbdt.n_estimators = 0;  // constant model, constant targets
  REQUIRE_THROWS_AS(loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.6},
                          spec, ClassHierarchy::builtin()),
                    ZeroVarianceError);
}

TEST_CASE("loocv needs at least three clusters") {
  std::vector<SurveyRecord> surveys{{"a", GeoPoint{0, 30}, 1.0},
                                    {"b", GeoPoint{1, 31}, 2.0}};
  auto ds = Dataset::build(surveys, DetectionStore{});
  ModelSpec spec;
  REQUIRE_THROWS_AS(loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.6},
                          spec, ClassHierarchy::builtin()),
                    InputError);
}

TEST_CASE("planted overlaps produce the constructed exclusion counts") {
  auto sc = small_linear(107, 12);
  sc.overlap_pairs = {{2, 7}};
  const auto ds = synth_dataset(sc);
  ModelSpec spec;
  spec.kind = ModelKind::Linear;
  const auto res = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0},
                         spec, ClassHierarchy::builtin());
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const int expected = (i == 2 || i == 7) ? 1 : 0;
    REQUIRE(res.rows[i].n_excluded == expected);
  }
}

TEST_CASE("loocv is deterministic given the seed") {
  const auto ds = synth_dataset(small_linear(113, 20));
  ModelSpec spec;
  spec.kind = ModelKind::Gbdt;
  spec.gbdt.n_estimators = 15;
  const auto a = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0}, spec,
                       ClassHierarchy::builtin(), 5, 2);
  const auto b = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0}, spec,
                       ClassHierarchy::builtin(), 5, 1);
  REQUIRE(a.r2 == b.r2);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    REQUIRE(a.rows[i].y_pred == b.rows[i].y_pred);
  }
}

TEST_CASE("comparison grid has the published shape and favors trees on "
          "nonlinear data") {
  SynthConfig sc;
  sc.n_clusters = 48;
  sc.seed = 31;
  sc.activity_min = 1.0;
  sc.activity_max = 1.0;
  sc.class_intensities = {{"Truck", 40},
                          {"Maritime Vessel", 6},
                          {"Building", 50},
                          {"Passenger-Vehicle", 20}};
  sc.relation.kind = Relation::Kind::Ratio;
  sc.relation.numerator = "Truck";
  sc.relation.denominator = "Maritime Vessel";
  sc.noise_sigma = 0.15;
  const auto ds = synth_dataset(sc);
  ModelSpec base;
  base.gbdt.n_estimators = 40;
  const auto grid = comparison_grid(ds, ClassHierarchy::builtin(), 0.0, base,
                                    0, 2);
  REQUIRE(grid.scheme_rows.size() == 4);
  REQUIRE(grid.columns.size() == 8);
  REQUIRE(grid.columns[0] ==
          std::make_pair(ModelKind::Gbdt, ClassLevel::Parent));
  REQUIRE(grid.top_cells.size() == 3);
  // counts row: gbdt/parent column 0 beats linear/parent column 2
  REQUIRE(grid.r2[0][0] > grid.r2[0][2]);
}

TEST_CASE("inner grid search picks the better hyperparameter") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2, 2);
  const std::size_t n = 80, d = 5;
  std::vector<double> x(n * d), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x[i * d + j] = u(rng);
    y[i] = 2 * x[i * d] - x[i * d + 2] + 0.1 * u(rng);
  }
  ModelSpec spec;
  spec.kind = ModelKind::Ridge;
  spec.alpha_grid = {1e6, 0.01};  // a crushing penalty and a sane one
  const auto tuned = fit_model(spec, x, n, d, y, 3);
  REQUIRE(tuned.as_linear().alpha == 0.01);

  // and the gbdt grid path selects deeper trees for an interaction target
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (x[i * d] > 0) == (x[i * d + 1] > 0) ? 1.0 : -1.0;
  }
  ModelSpec gb;
  gb.kind = ModelKind::Gbdt;
  gb.gbdt.n_estimators = 30;
  gb.max_depth_grid = {0, 2};
  const auto tree = fit_model(gb, x, n, d, y, 3);
  REQUIRE(tree.as_gbdt().params.max_depth == 2);
}

TEST_CASE("threshold sweep validates its grid and tracks count decay") {
  const auto ds = synth_dataset(small_linear(127, 24));
  const auto& h = ClassHierarchy::builtin();
  ModelSpec spec;
  spec.kind = ModelKind::Linear;

  REQUIRE_THROWS_AS(threshold_sweep(ds, h, {}, {SchemeKind::Counts},
                                    ClassLevel::Parent, spec),
                    InputError);
  REQUIRE_THROWS_AS(threshold_sweep(ds, h, {0.5, 0.5}, {SchemeKind::Counts},
                                    ClassLevel::Parent, spec),
                    InputError);
  REQUIRE_THROWS_AS(threshold_sweep(ds, h, {0.5, 1.5}, {SchemeKind::Counts},
                                    ClassLevel::Parent, spec),
                    InputError);

  const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 0.9};
  const auto sweep = threshold_sweep(ds, h, grid, {SchemeKind::Counts},
                                     ClassLevel::Parent, spec, 0, 2);
  REQUIRE(sweep.rows.size() == 5);
  REQUIRE(sweep.count_classes.size() == 10);
  for (std::size_t r = 1; r < sweep.rows.size(); ++r) {
    for (std::size_t c = 0; c < 10; ++c) {
      REQUIRE(sweep.rows[r].mean_counts[c] <=
              sweep.rows[r - 1].mean_counts[c]);
    }
  }
}

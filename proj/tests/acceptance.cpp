// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Scales and tolerances are pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "povmap/cli.hpp"
#include "povmap/config.hpp"
#include "povmap/evaluation.hpp"
#include "povmap/explain.hpp"
#include "povmap/shap.hpp"
#include "povmap/synth.hpp"

using namespace povmap;

namespace {

struct Checker {
  int failures = 0;

  void report(int id, const std::string& name, bool pass,
              const std::string& detail) {
    std::printf("[%s] criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id,
                name.c_str(), detail.c_str());
    if (!pass) ++failures;
  }

  template <typename Fn>
  void run(int id, const std::string& name, Fn&& fn) {
    try {
      auto [pass, detail] = fn();
      report(id, name, pass, detail);
    } catch (const std::exception& e) {
      report(id, name, false, std::string("exception: ") + e.what());
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

constexpr int kJobs = 2;

Dataset to_dataset(const SynthResult& result) {
  return Dataset::build(result.surveys, result.detections);
}

// ---- criterion 1: linear recovery at sigma = 0.05 * latent range ----------
std::pair<bool, std::string> linear_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& h = ClassHierarchy::builtin();
  SynthConfig sc;
  sc.n_clusters = 320;
  sc.seed = 42;
  sc.class_intensities = {{"Building", 120},
                          {"Passenger-Vehicle", 60},
                          {"Truck", 30},
                          {"Maritime Vessel", 10}};
  sc.relation.kind = Relation::Kind::Linear;
  sc.relation.weights = {{"Truck", 0.08},
                         {"Passenger-Vehicle", 0.02},
                         {"Building", 0.004}};
  sc.noise_sigma = 0.0;
  const auto quiet = generate(sc, h);
  double lo = quiet.latents[0], hi = lo;
  for (double v : quiet.latents) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  sc.noise_sigma = 0.05 * (hi - lo);
  const auto ds = to_dataset(generate(sc, h));
  ModelSpec ols;
  ols.kind = ModelKind::Linear;
  const auto res = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0},
                         ols, h, 0, kJobs);
  const double elapsed = seconds_since(t0);
  const bool pass = res.r2 >= 0.95 && elapsed < 60.0;
  return {pass, fmt("OLS loocv r2 = %.4f (>= 0.95), %.1fs (< 60s)", res.r2,
                    elapsed)};
}

// ---- criterion 2: GBDT beats OLS on a ratio relation -----------------------
std::pair<bool, std::string> nonlinear_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& h = ClassHierarchy::builtin();
  SynthConfig sc;
  sc.n_clusters = 320;
  sc.seed = 11;
  sc.activity_min = 1.0;
  sc.activity_max = 1.0;
  sc.class_intensities = {{"Truck", 40},
                          {"Maritime Vessel", 6},
                          {"Building", 50},
                          {"Passenger-Vehicle", 20}};
  sc.relation.kind = Relation::Kind::Ratio;
  sc.relation.numerator = "Truck";
  sc.relation.denominator = "Maritime Vessel";
  sc.noise_sigma = 0.2;
  const auto ds = to_dataset(generate(sc, h));
  const FeatureScheme scheme{SchemeKind::Counts, ClassLevel::Parent, 0.0};
  ModelSpec ols;
  ols.kind = ModelKind::Linear;
  ModelSpec gbdt;  // default parameters
  gbdt.kind = ModelKind::Gbdt;
  const double r_ols = loocv(ds, scheme, ols, h, 0, kJobs).r2;
  const double r_gbdt = loocv(ds, scheme, gbdt, h, 0, kJobs).r2;
  const double elapsed = seconds_since(t0);
  const bool pass = r_gbdt - r_ols >= 0.10 && elapsed < 300.0;
  return {pass, fmt("gbdt %.3f - ols %.3f = %.3f (>= 0.10), %.1fs", r_gbdt,
                    r_ols, r_gbdt - r_ols, elapsed)};
}

// ---- criterion 3: TreeSHAP vs the subset oracle ----------------------------
std::pair<bool, std::string> treeshap_exactness() {
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> dims(2, 10);
  std::uniform_int_distribution<int> n_trees(1, 20);
  std::uniform_int_distribution<int> depth(1, 3);
  std::uniform_real_distribution<double> u(-1, 1);
  double max_diff = 0, max_local = 0;
  for (int e = 0; e < 50; ++e) {
    const std::size_t d = dims(rng);
    const std::size_t n = 60;
    std::vector<double> x(n * d), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) x[i * d + j] = u(rng);
      y[i] = std::sin(2 * x[i * d]) + 0.6 * x[i * d + (d > 1)] + 0.2 * u(rng);
    }
    GbdtParams p;
    p.n_estimators = n_trees(rng);
    p.max_depth = depth(rng);
    p.learning_rate = 0.4;
    const auto ens = fit_gbdt(x, n, d, y, p);
    for (int s = 0; s < 50; ++s) {
      std::vector<double> point(d);
      for (auto& v : point) v = 1.3 * u(rng);
      const auto fast = tree_shap(ens, point);
      const auto oracle = brute_force_shap(ens, point);
      max_diff = std::max(max_diff,
                          std::abs(fast.base_value - oracle.base_value));
      for (std::size_t j = 0; j < d; ++j) {
        max_diff = std::max(max_diff, std::abs(fast.phi[j] - oracle.phi[j]));
      }
      max_local = std::max(max_local,
                           std::abs(fast.total() - ens.predict(point)));
    }
  }
  const bool pass = max_diff < 1e-9 && max_local < 1e-9;
  return {pass, fmt("max |treeshap - oracle| = %.2e, local accuracy %.2e "
                    "(< 1e-9)",
                    max_diff, max_local)};
}

// ---- criterion 4: lasso correctness ----------------------------------------
std::pair<bool, std::string> lasso_correctness() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(-2, 2);
  std::uniform_int_distribution<std::size_t> dims(2, 8);
  std::uniform_real_distribution<double> alphas(0.05, 1.0);
  double worst_kkt = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 50, d = dims(rng);
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = u(rng);
      y[i] = x(i, 0) - 0.5 * x(i, d - 1) + 0.4 * u(rng);
    }
    const double alpha = alphas(rng);
    const auto m = fit_lasso(x, y, alpha);
    Eigen::VectorXd resid(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = x(i, j);
      resid[i] = y[i] - m.predict(row);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const Eigen::VectorXd z =
          (x.col(j).array() - m.means[j]) / m.scales[j];
      const double g = z.dot(resid) / double(n);
      if (m.coefficients[j] == 0.0) {
        worst_kkt = std::max(worst_kkt, std::max(0.0, std::abs(g) - alpha));
      } else {
        worst_kkt = std::max(
            worst_kkt,
            std::abs(g - alpha * (m.coefficients[j] > 0 ? 1 : -1)));
      }
    }
  }

  // null threshold: exact zero vector above alpha_max
  std::mt19937_64 rng2(778);
  const std::size_t n = 60, d = 5;
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = u(rng2);
    y[i] = 2 * x(i, 1) + 0.3 * u(rng2);
  }
  const double ym = y.mean();
  double alpha_max = 0;
  for (std::size_t j = 0; j < d; ++j) {
    const double mj = x.col(j).mean();
    const double sd =
        std::sqrt((x.col(j).array() - mj).square().sum() / double(n));
    const Eigen::VectorXd z = (x.col(j).array() - mj) / sd;
    alpha_max =
        std::max(alpha_max, std::abs(z.dot((y.array() - ym).matrix())) /
                                double(n));
  }
  bool null_ok = true;
  for (double c : fit_lasso(x, y, alpha_max * 1.000001).coefficients) {
    null_ok = null_ok && c == 0.0;
  }

  // univariate closed form
  Eigen::MatrixXd x1(n, 1);
  for (std::size_t i = 0; i < n; ++i) x1(i, 0) = u(rng2);
  const double m1 = x1.col(0).mean();
  const double sd1 =
      std::sqrt((x1.col(0).array() - m1).square().sum() / double(n));
  Eigen::VectorXd y1 = 3.0 * (x1.col(0).array() - m1) / sd1;
  double worst_uni = 0;
  for (double alpha : {0.1, 0.5, 1.5, 2.5}) {
    const auto m = fit_lasso(x1, y1, alpha);
    worst_uni = std::max(worst_uni,
                         std::abs(m.coefficients[0] - (3.0 - alpha)));
  }

  const bool pass = worst_kkt <= 1e-6 && null_ok && worst_uni <= 1e-8;
  return {pass, fmt("KKT slack %.2e (<= 1e-6), null zeros %s, univariate "
                    "err %.2e (<= 1e-8)",
                    worst_kkt, null_ok ? "exact" : "VIOLATED", worst_uni)};
}

// ---- criterion 5: ridge limits ---------------------------------------------
std::pair<bool, std::string> ridge_limits() {
  std::mt19937_64 rng(555);
  std::uniform_real_distribution<double> u(-2, 2);
  double worst_agreement = 0;
  bool monotone = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50, d = 7;
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = u(rng);
      y[i] = x(i, 0) - 2 * x(i, 3) + 0.5 * u(rng);
    }
    const auto ols = fit_ols(x, y);
    const auto ridge0 = fit_ridge(x, y, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      worst_agreement = std::max(
          worst_agreement,
          std::abs(ols.coefficients[j] - ridge0.coefficients[j]));
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1e4, 1e6}) {
      const auto m = fit_ridge(x, y, alpha);
      double norm = 0;
      for (double c : m.coefficients) norm += c * c;
      norm = std::sqrt(norm);
      monotone = monotone && norm <= prev + 1e-10;
      prev = norm;
    }
  }
  const bool pass = worst_agreement <= 1e-8 && monotone;
  return {pass, fmt("ridge(0) vs ols max diff %.2e (<= 1e-8), norm monotone "
                    "over grid: %s",
                    worst_agreement, monotone ? "yes" : "NO")};
}

// ---- criterion 6: chip geometry and tile indexing --------------------------
std::pair<bool, std::string> geometry() {
  const GridSpec spec;
  const auto windows = chip_layout(spec);
  bool ok = windows.size() == 9;
  for (const auto& w : windows) {
    ok = ok && (w.x0 == 0 || w.x0 == 292 || w.x0 == 584);
    ok = ok && (w.y0 == 0 || w.y0 == 292 || w.y0 == 584);
  }
  ok = ok && (windows[0].x0 + spec.chip_px - windows[1].x0 == 124);
  for (int x = 0; x < spec.tile_px && ok; ++x) {
    bool covered = false;
    for (const auto& w : windows) {
      covered = covered || (x >= w.x0 && x < w.x0 + spec.chip_px);
    }
    ok = ok && covered;
  }
  int round_trips = 0;
  for (int flat = 0; flat < spec.tile_count(); ++flat) {
    round_trips += TileIndex::from_flat(flat, spec).flat(spec) == flat;
  }
  ok = ok && round_trips == 1156;
  return {ok, fmt("9 windows at {0,292,584}^2, 124 px overlap, coverage, "
                  "%d/1156 index round-trips",
                  round_trips)};
}

// ---- criterion 7: feature laws ----------------------------------------------
std::pair<bool, std::string> feature_laws() {
  const auto& h = ClassHierarchy::builtin();
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> count(0, 50);
  std::uniform_int_distribution<std::size_t> label(0, h.children().size() - 1);
  std::uniform_real_distribution<double> score(0, 1);
  std::uniform_real_distribution<double> size(0.5, 60);
  int cases = 0;
  for (int trial = 0; trial < 220; ++trial) {
    std::vector<DetectionRecord> dets;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      DetectionRecord rec;
      rec.cluster_id = "c";
      rec.label = h.children()[label(rng)];
      rec.score = score(rng);
      rec.box = BoundingBox{500, 500, size(rng), size(rng)};
      dets.push_back(rec);
    }
    const double lo = std::min(score(rng), score(rng));
    const double hi = std::max(lo, score(rng));

    const auto c_lo =
        tile_vector(dets, {SchemeKind::Counts, ClassLevel::Parent, lo}, h);
    const auto c_hi =
        tile_vector(dets, {SchemeKind::Counts, ClassLevel::Parent, hi}, h);
    const auto conf = tile_vector(
        dets, {SchemeKind::ConfidenceCounts, ClassLevel::Parent, lo}, h);
    const auto sz = tile_vector(
        dets, {SchemeKind::SizeCounts, ClassLevel::Parent, lo}, h);
    const auto both = tile_vector(
        dets, {SchemeKind::ConfSizeCounts, ClassLevel::Parent, lo}, h);
    const auto child =
        tile_vector(dets, {SchemeKind::Counts, ClassLevel::Child, lo}, h);

    auto unit = dets;
    for (auto& d : unit) d.box = BoundingBox{500, 500, 1, 1};
    const auto unit_counts =
        tile_vector(unit, {SchemeKind::Counts, ClassLevel::Parent, lo}, h);
    const auto unit_size = tile_vector(
        unit, {SchemeKind::SizeCounts, ClassLevel::Parent, lo}, h);

    for (std::size_t p = 0; p < 10; ++p) {
      if (c_hi.values[p] > c_lo.values[p]) return {false, "monotonicity"};
      if (conf.values[p] > c_lo.values[p] + 1e-9 ||
          conf.values[p] < lo * c_lo.values[p] - 1e-9) {
        return {false, "confidence bounds"};
      }
      if (both.values[p] != conf.values[p] ||
          both.values[10 + p] != sz.values[p]) {
        return {false, "2L concatenation"};
      }
      if (unit_size.values[p] != unit_counts.values[p]) {
        return {false, "unit-box degeneracy"};
      }
      double from_children = 0;
      for (auto c : h.children_of(p)) from_children += child.values[c];
      if (from_children != c_lo.values[p]) {
        return {false, "parent = sum of children"};
      }
    }
    ++cases;
  }
  return {true, fmt("5 laws over %d randomized cases", cases)};
}

// ---- criterion 8: no-leakage LOOCV ------------------------------------------
std::pair<bool, std::string> no_leakage() {
  const auto& h = ClassHierarchy::builtin();
  SynthConfig sc;
  sc.n_clusters = 40;
  sc.seed = 616;
  sc.class_intensities = {{"Truck", 25}, {"Building", 70}};
  sc.relation.kind = Relation::Kind::Linear;
  sc.relation.weights = {{"Truck", 0.1}, {"Building", 0.01}};
  sc.noise_sigma = 0.05;
  sc.overlap_pairs = {{4, 17}, {9, 30}};
  const auto result = generate(sc, h);
  const auto ds = to_dataset(result);

  bool fold_clean = true;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto fold = training_exclusion(i, ds.surveys, ds.grid);
    for (auto j : fold.train_indices) fold_clean = fold_clean && j != i;
  }
  ModelSpec ols;
  ols.kind = ModelKind::Linear;
  const auto res = loocv(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0},
                         ols, h, 0, kJobs);
  bool counts_ok = true;
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const bool planted = i == 4 || i == 17 || i == 9 || i == 30;
    counts_ok = counts_ok && res.rows[i].n_excluded == (planted ? 1 : 0);
  }
  return {fold_clean && counts_ok,
          fmt("planted exclusions exact: %s, self never in fold: %s",
              counts_ok ? "yes" : "NO", fold_clean ? "yes" : "NO")};
}

// ---- criterion 9: Pearson r2 semantics --------------------------------------
std::pair<bool, std::string> pearson_semantics() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> truth(100), pred(100);
  for (std::size_t i = 0; i < 100; ++i) {
    truth[i] = u(rng);
    pred[i] = 0.8 * truth[i] + 0.4 * u(rng);
  }
  const double base = pearson_r2(pred, truth);
  double worst = 0;
  for (double a : {3.0, -0.5, 1e-3}) {
    for (double b : {0.0, -7.0, 2.5}) {
      std::vector<double> mapped(100);
      for (std::size_t i = 0; i < 100; ++i) mapped[i] = a * pred[i] + b;
      worst = std::max(worst, std::abs(pearson_r2(mapped, truth) - base));
    }
  }
  const double sym = std::abs(pearson_r2(pred, truth) -
                              pearson_r2(truth, pred));
  bool raised = false;
  try {
    pearson_r2(std::vector<double>(100, 1.0), truth);
  } catch (const ZeroVarianceError&) {
    raised = true;
  }
  const bool pass = worst < 1e-12 && sym < 1e-15 && raised;
  return {pass, fmt("affine invariance %.2e (< 1e-12), symmetric, "
                    "zero-variance raises: %s",
                    worst, raised ? "yes" : "NO")};
}

// ---- criterion 10: explainability fidelity ----------------------------------
std::pair<bool, std::string> explainability_fidelity() {
  const auto& h = ClassHierarchy::builtin();
  SynthConfig sc;
  sc.n_clusters = 160;
  sc.seed = 5;
  sc.activity_min = 1.0;
  sc.activity_max = 1.0;
  sc.class_intensities = {{"Truck", 40},
                          {"Building", 100},
                          {"Maritime Vessel", 12},
                          {"Passenger-Vehicle", 30},
                          {"Engineering Vehicle", 6}};
  sc.relation.kind = Relation::Kind::Linear;
  sc.relation.weights = {{"Truck", 0.1}};
  sc.noise_sigma = 0.25;
  const auto ds = to_dataset(generate(sc, h));
  const auto fm =
      build_matrix(ds, {SchemeKind::Counts, ClassLevel::Parent, 0.0}, h);
  ModelSpec gbdt;
  const auto model =
      fit_model(gbdt, fm.values, fm.rows, fm.cols, fm.targets, 1);

  // local accuracy across the fitted suite
  double max_local = 0;
  for (std::size_t i = 0; i < fm.rows; ++i) {
    const auto ex = tree_shap(model.as_gbdt(), fm.row(i));
    max_local = std::max(max_local,
                         std::abs(ex.total() -
                                  model.as_gbdt().predict(fm.row(i))));
  }

  const auto summary = shap_summary(model.as_gbdt(), fm);
  const bool importance_ok =
      summary.importance.front().feature == "parent:Truck";
  const auto table = ablation_table(model, fm);
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].delta > table[best].delta) best = i;
  }
  const bool ablation_ok = table[best].feature == "parent:Truck";
  const bool pass = importance_ok && ablation_ok && max_local < 1e-9;
  return {pass, fmt("driver first in importance: %s, largest ablation drop: "
                    "%s, local accuracy %.2e",
                    importance_ok ? "yes" : "NO", ablation_ok ? "yes" : "NO",
                    max_local)};
}

// ---- criterion 11: byte-identical report bundles ----------------------------
std::pair<bool, std::string> report_determinism() {
  test_helpers::TempDir dir;
  const std::string config = dir.file("run.toml");
  test_helpers::write_file(
      config,
      "seed = 9\njobs = 2\nthreshold = 0.4\ngbdt.n_estimators = 15\n"
      "sweep.thresholds = [0.3, 0.6]\nsynth.n_clusters = 14\n"
      "detections = \"" + dir.file("detections.jsonl") + "\"\n"
      "survey = \"" + dir.file("survey.csv") + "\"\n");
  if (run_cli({"synth", "--config", config, "--out", dir.path().string()}) !=
      0) {
    return {false, "synth failed"};
  }
  const auto out_a = (dir.path() / "a").string();
  const auto out_b = (dir.path() / "b").string();
  if (run_cli({"report", "--config", config, "--out", out_a}) != 0 ||
      run_cli({"report", "--config", config, "--out", out_b}) != 0) {
    return {false, "report failed"};
  }
  int identical = 0;
  const std::vector<std::string> files{
      "grid.csv",       "sweep.csv",      "shap_summary.csv",
      "importance.csv", "dependence.csv", "ablation.csv",
      "scatter.csv",    "manifest.json"};
  for (const auto& name : files) {
    identical += test_helpers::read_file(out_a + "/" + name) ==
                 test_helpers::read_file(out_b + "/" + name);
  }
  return {identical == int(files.size()),
          fmt("%d/%zu bundle files byte-identical across reruns", identical,
              files.size())};
}

// ---- criterion 12: sweep behavior -------------------------------------------
std::pair<bool, std::string> sweep_behavior() {
  const auto& h = ClassHierarchy::builtin();
  SynthConfig sc;
  sc.n_clusters = 100;
  sc.seed = 3;
  sc.class_intensities = {{"Building", 150},
                          {"Truck", 80},
                          {"Passenger-Vehicle", 100},
                          {"Maritime Vessel", 40},
                          {"Engineering Vehicle", 60},
                          {"Railway Vehicle", 45},
                          {"Fixed-Wing Aircraft", 40},
                          {"Helipad", 50},
                          {"Construction Site", 55},
                          {"Vehicle Lot", 70}};
  sc.relation.kind = Relation::Kind::Linear;
  sc.relation.weights = {{"Truck", 0.05}, {"Building", 0.01}};
  sc.noise_sigma = 0.2;
  const auto ds = to_dataset(generate(sc, h));
  ModelSpec ols;
  ols.kind = ModelKind::Linear;
  const std::vector<double> ths{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const auto sweep = threshold_sweep(ds, h, ths, {SchemeKind::Counts},
                                     ClassLevel::Parent, ols, 0, kJobs);
  bool monotone = true;
  double worst_drift = 0;
  for (std::size_t r = 1; r < sweep.rows.size(); ++r) {
    double prev_total = 0, cur_total = 0;
    for (double v : sweep.rows[r - 1].mean_counts) prev_total += v;
    for (double v : sweep.rows[r].mean_counts) cur_total += v;
    for (std::size_t c = 0; c < sweep.count_classes.size(); ++c) {
      monotone = monotone && sweep.rows[r].mean_counts[c] <=
                                 sweep.rows[r - 1].mean_counts[c] + 1e-12;
      const double prev_share = sweep.rows[r - 1].mean_counts[c] / prev_total;
      const double cur_share = sweep.rows[r].mean_counts[c] / cur_total;
      if (prev_share > 0) {
        worst_drift = std::max(worst_drift,
                               std::abs(cur_share - prev_share) / prev_share);
      }
    }
  }
  const bool pass = monotone && worst_drift < 0.10;
  return {pass, fmt("counts monotone: %s, worst class-share drift %.3f "
                    "(< 0.10)",
                    monotone ? "yes" : "NO", worst_drift)};
}

}  // namespace

int main() {
  Checker checker;
  checker.run(1, "synthetic linear recovery", linear_recovery);
  checker.run(2, "nonlinear model ordering", nonlinear_ordering);
  checker.run(3, "treeshap exactness", treeshap_exactness);
  checker.run(4, "lasso correctness", lasso_correctness);
  checker.run(5, "ridge/ols limits", ridge_limits);
  checker.run(6, "chip geometry", geometry);
  checker.run(7, "feature laws", feature_laws);
  checker.run(8, "no-leakage loocv", no_leakage);
  checker.run(9, "pearson r2 semantics", pearson_semantics);
  checker.run(10, "explainability fidelity", explainability_fidelity);
  checker.run(11, "report determinism", report_determinism);
  checker.run(12, "sweep behavior", sweep_behavior);
  if (checker.failures > 0) {
    std::printf("%d criterion(s) FAILED\n", checker.failures);
    return 1;
  }
  std::printf("all 12 criteria passed\n");
  return 0;
}

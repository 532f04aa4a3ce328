#pragma once

#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "povmap/common.hpp"
#include "povmap/gbdt.hpp"
#include "povmap/linear.hpp"

namespace povmap {

enum class ModelKind { Gbdt, Linear, Lasso, Ridge };

inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Gbdt: return "gbdt";
    case ModelKind::Linear: return "linear";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::Ridge: return "ridge";
  }
  return "gbdt";
}

inline ModelKind parse_model_kind(std::string_view text) {
  if (text == "gbdt") return ModelKind::Gbdt;
  if (text == "linear") return ModelKind::Linear;
  if (text == "lasso") return ModelKind::Lasso;
  if (text == "ridge") return ModelKind::Ridge;
  throw InputError("unknown model '" + std::string(text) +
                   "' (expected gbdt|linear|lasso|ridge)");
}

// Which regressor to fit and with what hyperparameters. Optional grids turn
// on inner cross-validated selection on the training fold only.
struct ModelSpec {
  ModelKind kind = ModelKind::Gbdt;
  double alpha = 0.1;  // ridge / lasso penalty when no grid is given
  GbdtParams gbdt;
  std::vector<double> alpha_grid;
  std::vector<int> n_estimators_grid;
  std::vector<int> max_depth_grid;
  std::vector<double> learning_rate_grid;
  int inner_folds = 5;

  bool has_grid() const {
    if (kind == ModelKind::Lasso || kind == ModelKind::Ridge) {
      return !alpha_grid.empty();
    }
    if (kind == ModelKind::Gbdt) {
      return !n_estimators_grid.empty() || !max_depth_grid.empty() ||
             !learning_rate_grid.empty();
    }
    return false;
  }
};

class FittedModel {
 public:
  FittedModel() = default;
  explicit FittedModel(LinearModel m) : model_(std::move(m)) {}
  explicit FittedModel(TreeEnsemble m) : model_(std::move(m)) {}

  bool is_gbdt() const {
    return std::holds_alternative<TreeEnsemble>(model_);
  }
  const TreeEnsemble& as_gbdt() const {
    return std::get<TreeEnsemble>(model_);
  }
  const LinearModel& as_linear() const {
    return std::get<LinearModel>(model_);
  }

  std::size_t n_features() const {
    return is_gbdt() ? as_gbdt().n_features : as_linear().n_features();
  }

  double predict(std::span<const double> x) const {
    return is_gbdt() ? as_gbdt().predict(x) : as_linear().predict(x);
  }

  std::vector<double> predict_rows(std::span<const double> values,
                                   std::size_t rows, std::size_t cols) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      out[r] = predict(values.subspan(r * cols, cols));
    }
    return out;
  }

  nlohmann::json to_json() const {
    if (is_gbdt()) {
      nlohmann::json j;
      povmap::to_json(j, as_gbdt());
      return j;
    }
    nlohmann::json j;
    povmap::to_json(j, as_linear());
    return j;
  }

 private:
  std::variant<LinearModel, TreeEnsemble> model_;
};

namespace detail {

struct GridPoint {
  double alpha = 0;
  GbdtParams gbdt;
};

inline std::vector<GridPoint> grid_points(const ModelSpec& spec) {
  std::vector<GridPoint> points;
  if (spec.kind == ModelKind::Lasso || spec.kind == ModelKind::Ridge) {
    for (double a : spec.alpha_grid) points.push_back(GridPoint{a, spec.gbdt});
  } else if (spec.kind == ModelKind::Gbdt) {
    auto trees = spec.n_estimators_grid.empty()
                     ? std::vector<int>{spec.gbdt.n_estimators}
                     : spec.n_estimators_grid;
    auto depths = spec.max_depth_grid.empty()
                      ? std::vector<int>{spec.gbdt.max_depth}
                      : spec.max_depth_grid;
    auto rates = spec.learning_rate_grid.empty()
                     ? std::vector<double>{spec.gbdt.learning_rate}
                     : spec.learning_rate_grid;
    for (int t : trees) {
      for (int d : depths) {
        for (double lr : rates) {
          GbdtParams p = spec.gbdt;
          p.n_estimators = t;
          p.max_depth = d;
          p.learning_rate = lr;
          points.push_back(GridPoint{spec.alpha, p});
        }
      }
    }
  }
  return points;
}

inline FittedModel fit_point(const ModelSpec& spec, const GridPoint& point,
                             std::span<const double> x, std::size_t rows,
                             std::size_t cols, std::span<const double> y,
                             std::uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::Gbdt: {
      GbdtParams p = point.gbdt;
      p.seed = seed;
      return FittedModel(fit_gbdt(x, rows, cols, y, p));
    }
    case ModelKind::Linear: {
      const auto xe = detail::to_eigen(x, rows, cols);
      Eigen::VectorXd ye = Eigen::Map<const Eigen::VectorXd>(
          y.data(), Eigen::Index(rows));
      return FittedModel(fit_ols(xe, ye));
    }
    case ModelKind::Ridge: {
      const auto xe = detail::to_eigen(x, rows, cols);
      Eigen::VectorXd ye = Eigen::Map<const Eigen::VectorXd>(
          y.data(), Eigen::Index(rows));
      return FittedModel(fit_ridge(xe, ye, point.alpha));
    }
    case ModelKind::Lasso: {
      const auto xe = detail::to_eigen(x, rows, cols);
      Eigen::VectorXd ye = Eigen::Map<const Eigen::VectorXd>(
          y.data(), Eigen::Index(rows));
      return FittedModel(fit_lasso(xe, ye, point.alpha));
    }
  }
  throw InputError("unreachable model kind");
}

}  // namespace detail

// Fits the requested model. When a hyperparameter grid is present the point
// is chosen by k-fold cross-validated MSE on (x, y) alone, then refit on all
// of it; ties keep the first point in enumeration order.
inline FittedModel fit_model(const ModelSpec& spec, std::span<const double> x,
                             std::size_t rows, std::size_t cols,
                             std::span<const double> y,
                             std::uint64_t seed = 0) {
  if (!spec.has_grid()) {
    return detail::fit_point(spec, detail::GridPoint{spec.alpha, spec.gbdt}, x,
                             rows, cols, y, seed);
  }
  const auto points = detail::grid_points(spec);
  const int k = std::min<int>(spec.inner_folds, int(rows));
  if (points.size() <= 1 || k < 2 || rows < 2 * std::size_t(k)) {
    return detail::fit_point(spec,
                             points.empty()
                                 ? detail::GridPoint{spec.alpha, spec.gbdt}
                                 : points.front(),
                             x, rows, cols, y, seed);
  }
  // deterministic shuffle, round-robin fold assignment
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "inner_cv"));
  for (std::size_t i = rows; i > 1; --i) {
    std::swap(order[i - 1],
              order[std::size_t(rng.uniform_int(0, std::int64_t(i) - 1))]);
  }
  double best_mse = std::numeric_limits<double>::infinity();
  std::size_t best_point = 0;
  std::vector<double> train_x, train_y, test_x, test_y;
  for (std::size_t p = 0; p < points.size(); ++p) {
    double sse = 0;
    std::size_t count = 0;
    for (int fold = 0; fold < k; ++fold) {
      train_x.clear(); train_y.clear(); test_x.clear(); test_y.clear();
      for (std::size_t i = 0; i < rows; ++i) {
        const bool held_out = int(i % std::size_t(k)) == fold;
        auto src = x.subspan(order[i] * cols, cols);
        auto& dst = held_out ? test_x : train_x;
        dst.insert(dst.end(), src.begin(), src.end());
        (held_out ? test_y : train_y).push_back(y[order[i]]);
      }
      const FittedModel m =
          detail::fit_point(spec, points[p], train_x, train_y.size(), cols,
                            train_y, derive_seed(seed, "inner_fit"));
      for (std::size_t i = 0; i < test_y.size(); ++i) {
        const double pred = m.predict(
            std::span<const double>(test_x).subspan(i * cols, cols));
        sse += (pred - test_y[i]) * (pred - test_y[i]);
        ++count;
      }
    }
    const double mse = sse / double(count);
    if (mse < best_mse) {
      best_mse = mse;
      best_point = p;
    }
  }
  return detail::fit_point(spec, points[best_point], x, rows, cols, y, seed);
}

inline void save_model(const std::string& path, const FittedModel& model,
                       const std::string& config_hash) {
  nlohmann::json j{{"config_hash", config_hash}, {"model", model.to_json()}};
  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file '" + path + "'");
  out << j.dump(2) << "\n";
}

inline FittedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model file '" + path + "': " + e.what());
  }
  const auto& m = j.at("model");
  const std::string kind = m.at("kind").get<std::string>();
  if (kind == "gbdt") return FittedModel(tree_ensemble_from_json(m));
  return FittedModel(linear_model_from_json(m));
}

}  // namespace povmap

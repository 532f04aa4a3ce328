#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "povmap/common.hpp"

namespace povmap {

enum class LinearKind { Ols, Ridge, Lasso };

inline std::string to_string(LinearKind kind) {
  switch (kind) {
    case LinearKind::Ols: return "ols";
    case LinearKind::Ridge: return "ridge";
    case LinearKind::Lasso: return "lasso";
  }
  return "ols";
}

// Linear regressor over standardized features. Coefficients live in the
// standardized space; constant columns are dropped (scale 0, coefficient 0).
struct LinearModel {
  LinearKind kind = LinearKind::Ols;
  double intercept = 0;
  std::vector<double> coefficients;  // per input column, standardized space
  std::vector<double> means;
  std::vector<double> scales;  // 0 marks a dropped constant column
  double alpha = 0;
  bool rank_deficient = false;

  std::size_t n_features() const { return coefficients.size(); }

  double predict(std::span<const double> x) const {
    if (x.size() != coefficients.size()) {
      throw InputError("predict: expected " +
                       std::to_string(coefficients.size()) + " features, got " +
                       std::to_string(x.size()));
    }
    double y = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (scales[j] == 0) continue;
      y += coefficients[j] * (x[j] - means[j]) / scales[j];
    }
    return y;
  }
};

namespace detail {

struct Standardized {
  Eigen::MatrixXd z;               // active columns only, zero mean, unit var
  Eigen::VectorXd y_centered;
  double y_mean = 0;
  std::vector<double> means;
  std::vector<double> scales;      // 0 for dropped columns
  std::vector<std::size_t> active; // original index of each z column
};

inline Standardized standardize(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& y) {
  const auto n = x.rows();
  const auto d = x.cols();
  Standardized s;
  s.means.resize(d);
  s.scales.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double m = x.col(j).mean();
    const double var = (x.col(j).array() - m).square().sum() / double(n);
    const double sd = std::sqrt(var);
    s.means[j] = m;
    if (sd > 1e-12 * (1.0 + std::abs(m))) {
      s.scales[j] = sd;
      s.active.push_back(std::size_t(j));
    } else {
      s.scales[j] = 0;
    }
  }
  s.z.resize(n, Eigen::Index(s.active.size()));
  for (std::size_t k = 0; k < s.active.size(); ++k) {
    const auto j = Eigen::Index(s.active[k]);
    s.z.col(Eigen::Index(k)) = (x.col(j).array() - s.means[j]) / s.scales[j];
  }
  s.y_mean = y.mean();
  s.y_centered = y.array() - s.y_mean;
  return s;
}

inline LinearModel assemble(LinearKind kind, const Standardized& s,
                            const Eigen::VectorXd& w, double alpha,
                            bool rank_deficient, std::size_t d) {
  LinearModel model;
  model.kind = kind;
  model.alpha = alpha;
  model.rank_deficient = rank_deficient;
  model.intercept = s.y_mean;
  model.means = s.means;
  model.scales = s.scales;
  model.coefficients.assign(d, 0.0);
  for (std::size_t k = 0; k < s.active.size(); ++k) {
    model.coefficients[s.active[k]] = w[Eigen::Index(k)];
  }
  return model;
}

inline Eigen::MatrixXd to_eigen(std::span<const double> values,
                                std::size_t rows, std::size_t cols) {
  Eigen::MatrixXd x(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      x(Eigen::Index(r), Eigen::Index(c)) = values[r * cols + c];
    }
  }
  return x;
}

}  // namespace detail

// Least squares on standardized features; rank-deficient systems get the
// minimum-norm solution and are flagged.
inline LinearModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() < 2) throw InputError("fit_ols: fewer than 2 samples");
  const auto s = detail::standardize(x, y);
  Eigen::VectorXd w(Eigen::Index(s.active.size()));
  bool deficient = false;
  if (s.active.empty()) {
    // all columns constant: intercept-only model
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s.z);
    w = cod.solve(s.y_centered);
    deficient = cod.rank() < Eigen::Index(s.active.size());
  }
  return detail::assemble(LinearKind::Ols, s, w, 0.0, deficient,
                          std::size_t(x.cols()));
}

// Minimizes ||Zw - y||^2 + alpha ||w||^2 with an unpenalized intercept.
inline LinearModel fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double alpha) {
  if (alpha < 0) throw InputError("fit_ridge: alpha must be >= 0");
  if (alpha == 0) {
    LinearModel model = fit_ols(x, y);
    model.kind = LinearKind::Ridge;
    return model;
  }
  if (x.rows() < 2) throw InputError("fit_ridge: fewer than 2 samples");
  const auto s = detail::standardize(x, y);
  const auto k = Eigen::Index(s.active.size());
  Eigen::VectorXd w(k);
  if (k > 0) {
    Eigen::MatrixXd gram = s.z.transpose() * s.z;
    gram.diagonal().array() += alpha;
    w = gram.ldlt().solve(s.z.transpose() * s.y_centered);
  }
  return detail::assemble(LinearKind::Ridge, s, w, alpha, false,
                          std::size_t(x.cols()));
}

struct LassoOptions {
  double tol = 1e-8;       // max coefficient change per sweep
  int max_sweeps = 10000;
};

// Cyclic coordinate descent with soft-thresholding for
//   (1/2N) ||y - Zw||^2 + alpha ||w||_1
// on standardized features.
inline LinearModel fit_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             double alpha, const LassoOptions& opts = {}) {
  if (!(alpha > 0)) throw InputError("fit_lasso: alpha must be > 0");
  if (x.rows() < 2) throw InputError("fit_lasso: fewer than 2 samples");
  const auto s = detail::standardize(x, y);
  const auto n = double(x.rows());
  const auto k = Eigen::Index(s.active.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd residual = s.y_centered;  // y_c - Zw
  // standardized columns have z_j' z_j = N exactly up to rounding
  Eigen::VectorXd col_sq(k);
  for (Eigen::Index j = 0; j < k; ++j) col_sq[j] = s.z.col(j).squaredNorm();

  double max_change = 0;
  int sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    max_change = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double w_old = w[j];
      const double rho = s.z.col(j).dot(residual) / n + w_old * col_sq[j] / n;
      const double denom = col_sq[j] / n;
      double w_new = 0;
      if (rho > alpha) {
        w_new = (rho - alpha) / denom;
      } else if (rho < -alpha) {
        w_new = (rho + alpha) / denom;
      }
      if (w_new != w_old) {
        residual -= (w_new - w_old) * s.z.col(j);
        w[j] = w_new;
        max_change = std::max(max_change, std::abs(w_new - w_old));
      }
    }
    if (max_change < opts.tol) break;
  }
  if (sweep == opts.max_sweeps && max_change >= opts.tol) {
    throw ConvergenceError(
        "lasso did not converge: " + std::to_string(opts.max_sweeps) +
        " sweeps, last max coefficient change " + format_double(max_change));
  }
  return detail::assemble(LinearKind::Lasso, s, w, alpha, false,
                          std::size_t(x.cols()));
}

inline void to_json(nlohmann::json& j, const LinearModel& m) {
  j = nlohmann::json{{"kind", to_string(m.kind)},
                     {"intercept", m.intercept},
                     {"coefficients", m.coefficients},
                     {"means", m.means},
                     {"scales", m.scales},
                     {"alpha", m.alpha},
                     {"rank_deficient", m.rank_deficient}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
  LinearModel m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "ols") m.kind = LinearKind::Ols;
  else if (kind == "ridge") m.kind = LinearKind::Ridge;
  else if (kind == "lasso") m.kind = LinearKind::Lasso;
  else throw InputError("unknown linear model kind '" + kind + "'");
  m.intercept = j.at("intercept").get<double>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.means = j.at("means").get<std::vector<double>>();
  m.scales = j.at("scales").get<std::vector<double>>();
  m.alpha = j.at("alpha").get<double>();
  m.rank_deficient = j.at("rank_deficient").get<bool>();
  return m;
}

}  // namespace povmap

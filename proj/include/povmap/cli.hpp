#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "povmap/config.hpp"
#include "povmap/data_io.hpp"
#include "povmap/evaluation.hpp"
#include "povmap/explain.hpp"
#include "povmap/features.hpp"
#include "povmap/models.hpp"
#include "povmap/synth.hpp"

namespace povmap {

inline constexpr const char* kVersion = "0.1.0";

namespace cli_detail {

namespace fs = std::filesystem;

inline ClassHierarchy load_hierarchy(const RunConfig& config) {
  return config.hierarchy_file.empty()
             ? ClassHierarchy::builtin()
             : ClassHierarchy::from_file(config.hierarchy_file);
}

inline Dataset load_dataset(const RunConfig& config,
                            const ClassHierarchy& hierarchy) {
  config.grid.validate();
  auto surveys = load_survey(config.survey);
  auto detections = load_detections(config.detections, hierarchy, config.grid);
  if (config.nms) {
    const std::size_t suppressed = apply_nms(detections, config.nms_iou);
    std::cerr << "nms suppressed " << suppressed << " detections\n";
  }
  return Dataset::build(std::move(surveys), std::move(detections),
                        config.grid);
}

inline std::vector<std::string> provenance(const RunConfig& config) {
  return {"config_hash=" + config.config_hash(),
          "seed=" + std::to_string(config.seed),
          "threshold=" + format_double(config.threshold)};
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline void write_predictions(const std::string& path,
                              const LoocvResult& result,
                              const std::vector<std::string>& comments) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(result.rows.size());
  for (const auto& r : result.rows) {
    rows.push_back(
        {r.cluster_id, format_double(r.y_true), format_double(r.y_pred)});
  }
  write_csv(path, comments, {"cluster_id", "y_true", "y_pred"}, rows);
}

inline void append_scatter_rows(std::vector<std::vector<std::string>>& rows,
                                const std::string& scheme_name,
                                const LoocvResult& result) {
  for (const auto& r : result.rows) {
    rows.push_back({scheme_name, r.cluster_id, format_double(r.y_true),
                    format_double(r.y_pred)});
  }
}

inline void write_grid_csv(const std::string& path, const GridResult& grid,
                           std::vector<std::string> comments) {
  std::vector<std::string> header{"features"};
  for (const auto& [model, level] : grid.columns) {
    header.push_back(to_string(model) + "_" + to_string(level));
  }
  const char* rank_names[] = {"best", "second", "third"};
  for (std::size_t i = 0; i < grid.top_cells.size(); ++i) {
    const auto [s, c] = grid.top_cells[i];
    comments.push_back(std::string(rank_names[i]) + "=" +
                       to_string(grid.scheme_rows[s]) + "/" + header[c + 1] +
                       "=" + format_double(grid.r2[s][c]));
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t s = 0; s < grid.scheme_rows.size(); ++s) {
    std::vector<std::string> row{to_string(grid.scheme_rows[s])};
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      row.push_back(format_double(grid.r2[s][c]));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, comments, header, rows);
}

inline void print_grid(const GridResult& grid) {
  auto rank_of = [&](std::size_t s, std::size_t c) -> int {
    for (std::size_t i = 0; i < grid.top_cells.size(); ++i) {
      if (grid.top_cells[i] == std::make_pair(s, c)) return int(i) + 1;
    }
    return 0;
  };
  std::printf("%-18s", "features/model");
  for (const auto& [model, level] : grid.columns) {
    std::printf(" %13s",
                (to_string(model) + "/" + to_string(level).substr(0, 1))
                    .c_str());
  }
  std::printf("\n");
  for (std::size_t s = 0; s < grid.scheme_rows.size(); ++s) {
    std::printf("%-18s", to_string(grid.scheme_rows[s]).c_str());
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      const int rank = rank_of(s, c);
      std::string cell = fixed3(grid.r2[s][c]);
      if (rank) cell += "*" + std::to_string(rank);
      std::printf(" %13s", cell.c_str());
    }
    std::printf("\n");
  }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& sweep,
                            const std::vector<std::string>& comments) {
  std::vector<std::string> header{"threshold"};
  for (auto kind : sweep.kinds) header.push_back("r2:" + to_string(kind));
  for (const auto& name : sweep.count_classes) {
    header.push_back("count:" + name);
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& row : sweep.rows) {
    std::vector<std::string> out{format_double(row.threshold)};
    for (double v : row.r2) out.push_back(format_double(v));
    for (double v : row.mean_counts) out.push_back(format_double(v));
    rows.push_back(std::move(out));
  }
  write_csv(path, comments, header, rows);
}

inline void write_importance_csv(const std::string& path,
                                 const std::vector<ImportanceRow>& importance,
                                 const std::vector<std::string>& comments) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : importance) {
    rows.push_back(
        {r.feature, format_double(r.mean_abs), format_double(r.sum_abs)});
  }
  write_csv(path, comments, {"feature", "mean_abs_phi", "sum_abs_phi"}, rows);
}

inline void write_summary_csv(const std::string& path,
                              const SummaryResult& summary,
                              const FeatureMatrix& fm,
                              std::vector<std::string> comments) {
  comments.push_back("base_value=" + format_double(summary.base_value));
  std::vector<std::vector<std::string>> rows;
  rows.reserve(fm.rows * fm.cols);
  for (std::size_t i = 0; i < fm.rows; ++i) {
    for (std::size_t j = 0; j < fm.cols; ++j) {
      rows.push_back({fm.cluster_ids[i], fm.column_names[j],
                      format_double(fm.at(i, j)),
                      format_double(summary.phi[i * fm.cols + j])});
    }
  }
  write_csv(path, comments, {"cluster_id", "feature", "value", "phi"}, rows);
}

inline void write_dependence_csv(const std::string& path,
                                 const DependenceResult& dep,
                                 std::vector<std::string> comments) {
  comments.push_back("feature=" + dep.feature);
  comments.push_back("interaction=" + dep.interaction);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : dep.rows) {
    rows.push_back({r.sample_id, format_double(r.feature_value),
                    format_double(r.phi),
                    format_double(r.interaction_value)});
  }
  write_csv(path, comments,
            {"cluster_id", "feature_value", "phi", "interaction_value"}, rows);
}

inline void write_ablation_csv(const std::string& path,
                               const std::vector<AblationRow>& table,
                               const std::vector<std::string>& comments) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : table) {
    rows.push_back({r.feature, format_double(r.r2_full),
                    format_double(r.r2_ablated), format_double(r.delta)});
  }
  write_csv(path, comments, {"feature", "r2_full", "r2_ablated", "delta"},
            rows);
}

inline FittedModel fit_full(const RunConfig& config, const FeatureMatrix& fm,
                            std::optional<ModelKind> force_kind = {}) {
  ModelSpec spec = config.model_spec();
  if (force_kind) spec.kind = *force_kind;
  return fit_model(spec, fm.values, fm.rows, fm.cols, fm.targets,
                   derive_seed(config.seed, "full_fit"));
}

inline std::string out_path(const RunConfig& config, const std::string& name) {
  const fs::path dir = config.resolved_out_dir();
  fs::create_directories(dir);
  return (dir / name).string();
}

inline int cmd_synth(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  SynthConfig synth = config.synth;
  synth.seed = config.seed;
  const SynthResult result = generate(synth, hierarchy, config.grid);
  const auto comments = provenance(config);
  save_detections(out_path(config, "detections.jsonl"), result.detections,
                  comments);
  save_survey(out_path(config, "survey.csv"), result.surveys, comments);
  save_ground_truth(out_path(config, "ground_truth.json"), synth, result,
                    hierarchy, config.config_hash());
  std::printf("generated %zu clusters, %zu detections\n",
              result.surveys.size(), result.detections.total());
  return 0;
}

inline int cmd_featurize(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const FeatureMatrix fm =
      build_matrix(dataset, config.feature_scheme(), hierarchy);
  save_feature_matrix(out_path(config, "features.csv"), fm,
                      provenance(config));
  std::printf("wrote features.csv: %zu clusters x %zu features\n", fm.rows,
              fm.cols);
  return 0;
}

inline int cmd_evaluate(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const FeatureMatrix fm =
      build_matrix(dataset, config.feature_scheme(), hierarchy);
  const LoocvResult result =
      loocv_matrix(fm, dataset.surveys, config.grid, config.model_spec(),
                   config.seed, config.jobs);
  std::printf("r2 = %s\n", fixed3(result.r2).c_str());
  const auto comments = provenance(config);
  write_predictions(out_path(config, "predictions.csv"), result, comments);
  std::vector<std::vector<std::string>> scatter;
  append_scatter_rows(scatter, to_string(config.scheme), result);
  write_csv(out_path(config, "scatter.csv"), comments,
            {"scheme", "cluster_id", "y_true", "y_pred"}, scatter);
  save_model(out_path(config, "model.json"), fit_full(config, fm),
             config.config_hash());
  return 0;
}

inline int cmd_grid(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const GridResult grid =
      comparison_grid(dataset, hierarchy, config.threshold,
                      config.model_spec(), config.seed, config.jobs);
  write_grid_csv(out_path(config, "grid.csv"), grid, provenance(config));
  print_grid(grid);
  return 0;
}

inline int cmd_sweep(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const SweepResult sweep = threshold_sweep(
      dataset, hierarchy, config.sweep_thresholds, config.sweep_kinds,
      config.level, config.model_spec(), config.seed, config.jobs);
  write_sweep_csv(out_path(config, "sweep.csv"), sweep, provenance(config));
  std::printf("wrote sweep.csv: %zu thresholds\n", sweep.rows.size());
  return 0;
}

inline int cmd_explain(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const FeatureMatrix fm =
      build_matrix(dataset, config.feature_scheme(), hierarchy);
  const auto comments = provenance(config);
  if (config.model != ModelKind::Gbdt) {
    const FittedModel model = fit_full(config, fm);
    write_importance_csv(
        out_path(config, "importance.csv"),
        coefficient_importance(model.as_linear(), fm.column_names), comments);
    std::printf("linear-family model: wrote coefficient importance only\n");
    return 0;
  }
  const FittedModel model = fit_full(config, fm);
  const SummaryResult summary = shap_summary(model.as_gbdt(), fm);
  write_summary_csv(out_path(config, "shap_summary.csv"), summary, fm,
                    comments);
  write_importance_csv(out_path(config, "importance.csv"), summary.importance,
                       comments);
  const std::string feature = config.explain_feature.empty()
                                  ? summary.importance.front().feature
                                  : config.explain_feature;
  const DependenceResult dep =
      dependence_data(model.as_gbdt(), fm, feature, config.interaction);
  write_dependence_csv(out_path(config, "dependence.csv"), dep, comments);
  std::printf("explained %zu clusters; top feature %s\n", fm.rows,
              summary.importance.front().feature.c_str());
  return 0;
}

inline int cmd_ablate(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const FeatureMatrix fm =
      build_matrix(dataset, config.feature_scheme(), hierarchy);
  const FittedModel model = fit_full(config, fm);
  write_ablation_csv(out_path(config, "ablation.csv"),
                     ablation_table(model, fm), provenance(config));
  std::printf("wrote ablation.csv: %zu features\n", fm.cols);
  return 0;
}

// One directory with every analysis table plus a manifest. The SHAP tables
// always come from a tree model; the scatter file uses the configured model.
inline int cmd_report(const RunConfig& config) {
  const auto hierarchy = load_hierarchy(config);
  const Dataset dataset = load_dataset(config, hierarchy);
  const std::string hash = config.config_hash();

  const std::string manifest_path = out_path(config, "manifest.json");
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    nlohmann::json old;
    try {
      in >> old;
    } catch (const nlohmann::json::exception&) {
      throw InputError("existing manifest.json is unreadable; use a clean "
                       "output directory");
    }
    if (old.value("config_hash", "") != hash) {
      throw InputError(
          "output directory holds a report for a different configuration "
          "(config_hash mismatch); use a clean directory");
    }
  }
  const auto comments = provenance(config);

  const GridResult grid =
      comparison_grid(dataset, hierarchy, config.threshold,
                      config.model_spec(), config.seed, config.jobs);
  write_grid_csv(out_path(config, "grid.csv"), grid, comments);

  const SweepResult sweep = threshold_sweep(
      dataset, hierarchy, config.sweep_thresholds, config.sweep_kinds,
      config.level, config.model_spec(), config.seed, config.jobs);
  write_sweep_csv(out_path(config, "sweep.csv"), sweep, comments);

  std::vector<std::vector<std::string>> scatter;
  for (SchemeKind kind :
       {SchemeKind::Counts, SchemeKind::ConfidenceCounts,
        SchemeKind::SizeCounts, SchemeKind::ConfSizeCounts}) {
    const FeatureScheme scheme{kind, config.level, config.threshold};
    const FeatureMatrix fm = build_matrix(dataset, scheme, hierarchy);
    const LoocvResult res =
        loocv_matrix(fm, dataset.surveys, config.grid, config.model_spec(),
                     config.seed, config.jobs);
    append_scatter_rows(scatter, to_string(kind), res);
  }
  write_csv(out_path(config, "scatter.csv"), comments,
            {"scheme", "cluster_id", "y_true", "y_pred"}, scatter);

  const FeatureMatrix fm =
      build_matrix(dataset, config.feature_scheme(), hierarchy);
  const FittedModel tree_model = fit_full(config, fm, ModelKind::Gbdt);
  const SummaryResult summary = shap_summary(tree_model.as_gbdt(), fm);
  write_summary_csv(out_path(config, "shap_summary.csv"), summary, fm,
                    comments);
  write_importance_csv(out_path(config, "importance.csv"), summary.importance,
                       comments);
  const std::string feature = config.explain_feature.empty()
                                  ? summary.importance.front().feature
                                  : config.explain_feature;
  const DependenceResult dep =
      dependence_data(tree_model.as_gbdt(), fm, feature, config.interaction);
  write_dependence_csv(out_path(config, "dependence.csv"), dep, comments);
  write_ablation_csv(out_path(config, "ablation.csv"),
                     ablation_table(tree_model, fm), comments);

  nlohmann::json manifest{
      {"config_hash", hash},
      {"seed", config.seed},
      {"versions", {{"povmap", kVersion}}},
      {"files",
       {"grid.csv", "sweep.csv", "shap_summary.csv", "importance.csv",
        "dependence.csv", "ablation.csv", "scatter.csv"}}};
  std::ofstream out(manifest_path);
  if (!out) throw InputError("cannot write '" + manifest_path + "'");
  out << manifest.dump(2) << "\n";
  std::printf("report written to %s\n", config.resolved_out_dir().c_str());
  return 0;
}

}  // namespace cli_detail

inline int run_cli(std::vector<std::string> args) {
  CLI::App app{"interpretable object-count poverty mapping pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, out_flag, detections_flag, survey_flag;
  std::string scheme_flag, level_flag, model_flag, feature_flag;
  std::string interaction_flag;
  double threshold_flag = 0, alpha_flag = 0, sigma_flag = 0;
  std::uint64_t seed_flag = 0;
  int jobs_flag = 0, n_clusters_flag = 0;
  bool nms_flag = false;

  app.add_option("--config", config_path, "run configuration file");
  app.add_option("--seed", seed_flag, "global random seed");
  app.add_option("--out", out_flag,
                 "output directory (default $POVMAP_OUT or .)");
  app.add_option("--jobs", jobs_flag, "worker threads for fold-parallel runs");

  auto add_data_options = [&](CLI::App* cmd) {
    cmd->add_option("--detections", detections_flag, "detections.jsonl path");
    cmd->add_option("--survey", survey_flag, "survey.csv path");
    cmd->add_option("--scheme", scheme_flag,
                    "counts|conf_counts|size_counts|conf_size_counts");
    cmd->add_option("--level", level_flag, "parent|child");
    cmd->add_option("--threshold", threshold_flag, "confidence threshold");
    cmd->add_option("--model", model_flag, "gbdt|linear|lasso|ridge");
    cmd->add_option("--alpha", alpha_flag, "ridge/lasso penalty");
    cmd->add_flag("--nms", nms_flag, "tile-level duplicate suppression");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--n-clusters", n_clusters_flag, "number of clusters");
  synth->add_option("--noise-sigma", sigma_flag, "target noise sigma");
  auto* featurize =
      app.add_subcommand("featurize", "write the feature matrix");
  auto* evaluate =
      app.add_subcommand("evaluate", "spatially-excluded LOOCV score");
  auto* grid =
      app.add_subcommand("grid", "model x feature comparison table");
  auto* sweep =
      app.add_subcommand("sweep", "confidence threshold sweep");
  auto* explain =
      app.add_subcommand("explain", "SHAP summary, importance, dependence");
  explain->add_option("--feature", feature_flag,
                      "feature for the dependence plot");
  explain->add_option("--interaction", interaction_flag,
                      "interaction feature or 'auto'");
  auto* ablate =
      app.add_subcommand("ablate", "test-time feature ablation table");
  auto* report = app.add_subcommand("report", "full analysis bundle");
  report->add_option("--feature", feature_flag,
                     "feature for the dependence plot");
  for (CLI::App* cmd :
       {featurize, evaluate, grid, sweep, explain, ablate, report}) {
    add_data_options(cmd);
  }

  std::vector<const char*> argv;
  argv.push_back("povmap");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config.apply_file(config_path);
    if (app.count("--seed")) config.seed = seed_flag;
    if (app.count("--out")) config.out_dir = out_flag;
    if (app.count("--jobs")) config.jobs = jobs_flag;
    auto flag_set = [&](CLI::App* cmd, const std::string& name) {
      return cmd->count(name) > 0;
    };
    for (CLI::App* cmd :
         {featurize, evaluate, grid, sweep, explain, ablate, report}) {
      if (!cmd->parsed()) continue;
      if (flag_set(cmd, "--detections")) config.detections = detections_flag;
      if (flag_set(cmd, "--survey")) config.survey = survey_flag;
      if (flag_set(cmd, "--scheme")) {
        config.scheme = parse_scheme_kind(scheme_flag);
      }
      if (flag_set(cmd, "--level")) config.level = parse_level(level_flag);
      if (flag_set(cmd, "--threshold")) config.threshold = threshold_flag;
      if (flag_set(cmd, "--model")) {
        config.model = parse_model_kind(model_flag);
      }
      if (flag_set(cmd, "--alpha")) config.alpha = alpha_flag;
      if (flag_set(cmd, "--nms")) config.nms = true;
    }
    if (synth->parsed()) {
      if (flag_set(synth, "--n-clusters")) {
        config.synth.n_clusters = n_clusters_flag;
      }
      if (flag_set(synth, "--noise-sigma")) {
        config.synth.noise_sigma = sigma_flag;
      }
      return cli_detail::cmd_synth(config);
    }
    if (explain->parsed() || report->parsed()) {
      CLI::App* cmd = explain->parsed() ? explain : report;
      if (flag_set(cmd, "--feature")) config.explain_feature = feature_flag;
      if (explain->parsed() && flag_set(explain, "--interaction")) {
        config.interaction = interaction_flag;
      }
    }
    if (featurize->parsed()) return cli_detail::cmd_featurize(config);
    if (evaluate->parsed()) return cli_detail::cmd_evaluate(config);
    if (grid->parsed()) return cli_detail::cmd_grid(config);
    if (sweep->parsed()) return cli_detail::cmd_sweep(config);
    if (explain->parsed()) return cli_detail::cmd_explain(config);
    if (ablate->parsed()) return cli_detail::cmd_ablate(config);
    if (report->parsed()) return cli_detail::cmd_report(config);
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ComputeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args));
}

}  // namespace povmap

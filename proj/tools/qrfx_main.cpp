// qrfx: quantile-regression-forest pipeline for tabular sports data.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrfx/compare.hpp"
#include "qrfx/csv.hpp"
#include "qrfx/dataset.hpp"
#include "qrfx/error.hpp"
#include "qrfx/explain.hpp"
#include "qrfx/forest.hpp"
#include "qrfx/impute.hpp"
#include "qrfx/l1_quantile.hpp"
#include "qrfx/parallel.hpp"
#include "qrfx/pipeline.hpp"
#include "qrfx/rng.hpp"
#include "qrfx/svg.hpp"

using namespace qrfx;

namespace {

TabularDataset load_data(const std::string& csv, const std::string& schema_path) {
  return load_csv_dataset(csv, load_schema(schema_path));
}

// Feature matrix + target over the named columns (all rows).
struct Xy {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> names;
};

Xy build_xy(const TabularDataset& d, const std::string& target,
            const std::vector<std::string>& features,
            const std::vector<std::string>& exclude) {
  if (d.has_any_missing())
    throw ValidationError("dataset must be imputed first (run qrfx impute)");
  int tgt = d.column_index(target);
  if (tgt < 0) throw SchemaError("no such column: " + target);

  Xy out;
  std::vector<std::size_t> cols;
  if (features.empty()) {
    for (std::size_t j : d.feature_indices(exclude))
      if (static_cast<int>(j) != tgt) {
        cols.push_back(j);
        out.names.push_back(d.schema[j].name);
      }
  } else {
    for (const auto& name : features) {
      int j = d.column_index(name);
      if (j < 0) throw SchemaError("no such column: " + name);
      cols.push_back(static_cast<std::size_t>(j));
      out.names.push_back(name);
    }
  }
  out.x = Matrix(d.n_rows(), cols.size());
  out.y.resize(d.n_rows());
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    out.y[i] = d.at(i, static_cast<std::size_t>(tgt));
    for (std::size_t c = 0; c < cols.size(); ++c) out.x(i, c) = d.at(i, cols[c]);
  }
  return out;
}

Matrix model_matrix(const TabularDataset& d, const QuantileForest& model) {
  if (d.has_any_missing())
    throw ValidationError("dataset must be imputed first (run qrfx impute)");
  Matrix x(d.n_rows(), model.n_features());
  for (std::size_t c = 0; c < model.feature_names.size(); ++c) {
    int j = d.column_index(model.feature_names[c]);
    if (j < 0) throw SchemaError("model feature missing from data: " +
                                 model.feature_names[c]);
    for (std::size_t i = 0; i < d.n_rows(); ++i)
      x(i, c) = d.at(i, static_cast<std::size_t>(j));
  }
  return x;
}

QuantileInterp parse_interp(const std::string& s) {
  if (s == "lower") return QuantileInterp::lower;
  if (s == "linear") return QuantileInterp::linear;
  throw ValidationError("--quantile-interp must be lower|linear");
}

void print_stats_block(const std::string& title, const TabularDataset& d) {
  SummaryStats stats = summarize(d);
  std::printf("%s (n=%zu)\n", title.c_str(), d.n_rows());
  std::printf("  %-18s %10s %10s %6s\n", "column", "mean", "sd", "miss%");
  for (std::size_t j = 0; j < d.n_cols(); ++j) {
    const ColumnStats& cs = stats.columns[j];
    std::printf("  %-18s %10s %10s %5.0f%%\n", d.schema[j].name.c_str(),
                cs.mean ? format_number(*cs.mean).c_str() : "-",
                cs.sd ? format_number(*cs.sd).c_str() : "-", cs.miss_pct);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"quantile-regression-forest pipeline"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (speed only)");
  app.parse_complete_callback([&] {
    if (threads >= 1) thread_cap() = threads;
  });

  std::string schema_path, input, target = "d_resEffe", out_path, plot_path;
  std::vector<std::string> exclude = {"d_resOffi"};
  double tau = 0.9;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd, bool need_seed) {
    cmd->add_option("--schema", schema_path, "schema JSON path")->required();
    cmd->add_option("--target", target, "target column");
    cmd->add_option("--exclude", exclude, "columns excluded from modeling");
    if (need_seed) cmd->add_option("--seed", seed, "master seed")->required();
  };

  // --- stats ---
  auto* stats_cmd = app.add_subcommand("stats", "per-column summary statistics");
  stats_cmd->add_option("csv", input)->required();
  stats_cmd->add_option("--schema", schema_path)->required();
  stats_cmd->add_option("--out", out_path, "stats CSV path");
  stats_cmd->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    if (d.group.empty()) {
      print_stats_block("all", d);
    } else {
      for (auto& [label, g] : split_by_group(d)) print_stats_block(label, g);
    }
    if (!out_path.empty()) write_stats_csv(out_path, d);
  });

  // --- impute-eval ---
  auto* ieval = app.add_subcommand("impute-eval", "nested-CV imputer ranking");
  ieval->add_option("csv", input)->required();
  add_common(ieval, true);
  int outer_k = 4, inner_k = 3;
  ieval->add_option("--outer-k", outer_k);
  ieval->add_option("--inner-k", inner_k);
  ieval->add_option("--out", out_path, "report JSON path");
  ieval->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    ImputeOptions opt;
    opt.seed = seed;
    ImputationEvalReport report =
        evaluate_imputers(d, target, outer_k, inner_k, seed, exclude, opt);
    for (const auto& [method, m] : report.methods)
      std::printf("%-6s mse=%.6f rmse=%.6f r2=%.4f\n", impute_method_name(method),
                  m.mse, m.rmse, m.r2);
    std::printf("best (mse): %s\n", impute_method_name(report.best_mse));
    if (!out_path.empty()) write_impute_report_json(out_path, report);
  });

  // --- impute ---
  auto* imp = app.add_subcommand("impute", "fill missing values");
  imp->add_option("csv", input)->required();
  imp->add_option("--schema", schema_path)->required();
  std::string method_name = "rf";
  ImputeOptions iopt;
  imp->add_option("--method", method_name, "mean|knn|bayes|rf");
  imp->add_option("--seed", iopt.seed);
  imp->add_option("--knn-k", iopt.knn_k);
  imp->add_option("--rounds", iopt.rounds);
  imp->add_option("--out", out_path, "imputed CSV path")->required();
  imp->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    auto [fitted, imputed] = fit_transform(d, impute_method_from_string(method_name), iopt);
    save_csv_dataset(out_path, imputed);
    for (const auto& w : fitted.warnings)
      std::fprintf(stderr, "warning: %s: %s\n", w.column.c_str(), w.message.c_str());
    std::printf("imputed %zu rows -> %s\n", imputed.n_rows(), out_path.c_str());
  });

  // --- select ---
  auto* sel_cmd = app.add_subcommand("select", "L1 regularization path + CV choice");
  sel_cmd->add_option("csv", input)->required();
  add_common(sel_cmd, true);
  std::string loss_name = "pinball";
  int repeats = 10, folds = 3, lambda_count = 60;
  sel_cmd->add_option("--tau", tau);
  sel_cmd->add_option("--loss", loss_name, "pinball|squared");
  sel_cmd->add_option("--repeats", repeats);
  sel_cmd->add_option("--folds", folds);
  sel_cmd->add_option("--lambda-count", lambda_count);
  sel_cmd->add_option("--out", out_path, "path CSV");
  sel_cmd->add_option("--plot", plot_path, "path SVG");
  sel_cmd->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    bool pinball_loss = loss_name == "pinball";
    if (!pinball_loss && loss_name != "squared")
      throw ValidationError("--loss must be pinball|squared");
    Xy xy = build_xy(d, target, {}, exclude);
    auto grid = default_lambda_grid(xy.x, xy.y, pinball_loss, QuantileLevel{tau},
                                    lambda_count);
    SelectionResult sel = select_features(
        d, target, QuantileLevel{tau}, pinball_loss ? L1Loss::pinball : L1Loss::squared,
        grid, repeats, folds, seed, exclude);
    const PathPoint& chosen = sel.path[sel.chosen_index];
    std::printf("chosen lambda=%.6g s=%.4f loss=%.6f features=%zu\n", chosen.lambda,
                chosen.s, chosen.mean_cv_loss, sel.chosen_features.size());
    for (const auto& f : sel.chosen_features) std::printf("  %s\n", f.c_str());
    if (!out_path.empty()) write_path_csv(out_path, sel);
    if (!plot_path.empty())
      svg::write_path_plot(plot_path, sel,
                           pinball_loss ? "mean CV pinball" : "mean CV MSE");
  });

  // --- tune ---
  auto* tune_cmd = app.add_subcommand("tune", "grid-search QRF hyperparameters");
  tune_cmd->add_option("csv", input)->required();
  add_common(tune_cmd, true);
  std::vector<std::string> features;
  int tune_folds = 4;
  tune_cmd->add_option("--tau", tau);
  tune_cmd->add_option("--features", features, "restrict to these columns");
  tune_cmd->add_option("--folds", tune_folds);
  tune_cmd->add_option("--out", out_path, "result JSON");
  tune_cmd->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    Xy xy = build_xy(d, target, features, exclude);
    TuneResult t = tune_forest(xy.x, xy.y, QuantileLevel{tau},
                               default_hyper_grid(xy.x.cols), tune_folds, seed);
    std::printf("best: n_estimators=%d max_depth=%d max_features=%d pinball=%.6f\n",
                t.best.n_estimators, t.best.max_depth, t.best.max_features,
                t.mean_pinball);
    if (!out_path.empty()) {
      nlohmann::json j = {{"n_estimators", t.best.n_estimators},
                          {"max_depth", t.best.max_depth},
                          {"max_features", t.best.max_features},
                          {"cv_pinball", t.mean_pinball}};
      std::ofstream out(out_path);
      if (!out) throw Error("cannot write " + out_path);
      out << j.dump(2) << '\n';
    }
  });

  // --- train ---
  auto* train_cmd = app.add_subcommand("train", "fit a quantile forest");
  train_cmd->add_option("csv", input)->required();
  add_common(train_cmd, true);
  ForestHyper hyper;
  bool have_hyper = false;
  train_cmd->add_option("--tau", tau);
  train_cmd->add_option("--features", features);
  train_cmd->add_option("--folds", tune_folds);
  auto* ne = train_cmd->add_option("--n-estimators", hyper.n_estimators);
  auto* md = train_cmd->add_option("--max-depth", hyper.max_depth);
  auto* mf = train_cmd->add_option("--max-features", hyper.max_features);
  train_cmd->add_option("--out", out_path, "model JSON")->required();
  train_cmd->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    Xy xy = build_xy(d, target, features, exclude);
    have_hyper = ne->count() && md->count() && mf->count();
    if (!have_hyper) {
      TuneResult t = tune_forest(xy.x, xy.y, QuantileLevel{tau},
                                 default_hyper_grid(xy.x.cols), tune_folds,
                                 derive_seed(seed, "tune"));
      hyper = t.best;
      std::printf("tuned: n_estimators=%d max_depth=%d max_features=%d (pinball %.6f)\n",
                  hyper.n_estimators, hyper.max_depth, hyper.max_features,
                  t.mean_pinball);
    }
    QuantileForest f =
        fit_forest(xy.x, xy.y, hyper, derive_seed(seed, "train"), xy.names);
    save_model(f, out_path);
    std::printf("model written to %s (%zu features, %d trees)\n", out_path.c_str(),
                f.n_features(), hyper.n_estimators);
  });

  // --- predict ---
  auto* pred_cmd = app.add_subcommand("predict", "predict quantiles or means");
  std::string model_path, interp_name = "lower";
  bool use_mean = false;
  pred_cmd->add_option("model", model_path)->required();
  pred_cmd->add_option("csv", input)->required();
  pred_cmd->add_option("--schema", schema_path)->required();
  pred_cmd->add_option("--tau", tau);
  pred_cmd->add_flag("--mean", use_mean, "predict the conditional mean");
  pred_cmd->add_option("--quantile-interp", interp_name, "lower|linear");
  pred_cmd->add_option("--out", out_path, "predictions CSV");
  pred_cmd->callback([&] {
    QuantileForest model = load_model(model_path);
    TabularDataset d = load_data(input, schema_path);
    Matrix x = model_matrix(d, model);
    QuantileInterp interp = parse_interp(interp_name);
    CsvTable t;
    t.header = {"row", use_mean ? "mean" : "q" + format_number(tau)};
    for (std::size_t i = 0; i < x.rows; ++i) {
      std::span<const double> row(&x.data[i * x.cols], x.cols);
      double v = use_mean ? model.predict_mean(row)
                          : model.predict_quantile(row, QuantileLevel{tau}, interp);
      std::printf("%zu %.6f\n", i, v);
      t.rows.push_back({std::to_string(i), format_number(v)});
    }
    if (!out_path.empty()) write_csv(out_path, t);
  });

  // --- explain ---
  auto* explain_cmd = app.add_subcommand("explain", "SHAP / ICE / 2-D PDP");
  explain_cmd->require_subcommand(1);

  auto* shap_cmd = explain_cmd->add_subcommand("shap", "Shapley attributions");
  std::string mode = "exact", bar_path;
  int permutations = 2000, row_index = -1;
  shap_cmd->add_option("model", model_path)->required();
  shap_cmd->add_option("csv", input)->required();
  shap_cmd->add_option("--schema", schema_path)->required();
  shap_cmd->add_option("--mode", mode, "exact|sampled");
  shap_cmd->add_option("--permutations", permutations);
  shap_cmd->add_option("--seed", seed);
  shap_cmd->add_option("--tau", tau);
  shap_cmd->add_flag("--mean", use_mean);
  shap_cmd->add_option("--quantile-interp", interp_name);
  shap_cmd->add_option("--row", row_index, "explain one row (waterfall)");
  shap_cmd->add_option("--out", out_path, "beeswarm-source CSV / waterfall CSV");
  shap_cmd->add_option("--bar", bar_path, "bar SVG / waterfall SVG");
  shap_cmd->callback([&] {
    QuantileForest model = load_model(model_path);
    TabularDataset d = load_data(input, schema_path);
    Matrix x = model_matrix(d, model);
    ExplainModel em = use_mean
                          ? mean_model(model)
                          : quantile_model(model, QuantileLevel{tau},
                                           parse_interp(interp_name));
    if (mode != "exact" && mode != "sampled")
      throw ValidationError("--mode must be exact|sampled");
    if (row_index >= 0) {
      if (static_cast<std::size_t>(row_index) >= x.rows)
        throw ValidationError("--row out of range");
      std::span<const double> row(&x.data[row_index * x.cols], x.cols);
      WaterfallRecord rec = shap_individual(em, row, x);
      std::printf("base=%.6f prediction=%.6f\n", rec.base, rec.prediction);
      for (const auto& e : rec.entries)
        std::printf("  %-18s phi=%+.6f value=%.4f\n",
                    model.feature_names[e.feature].c_str(), e.phi, e.value);
      if (!out_path.empty()) write_waterfall_csv(out_path, rec, model.feature_names);
      if (!bar_path.empty())
        svg::write_waterfall_plot(bar_path, rec, model.feature_names);
      return;
    }
    ShapReport report =
        mode == "exact" && model.n_features() <= kShapExactMaxFeatures
            ? shap_global(em, x, x, permutations, seed)
            : [&] {
                ShapReport r;
                r.exact = false;
                r.phi = Matrix(x.rows, em.p);
                std::vector<double> bases(x.rows);
                for (std::size_t i = 0; i < x.rows; ++i) {
                  std::span<const double> row(&x.data[i * x.cols], x.cols);
                  ShapValues sv = shap_sampled(em, row, x, permutations,
                                               derive_seed(seed, "shap-row", i));
                  for (std::size_t j = 0; j < em.p; ++j) r.phi(i, j) = sv.phi[j];
                  bases[i] = sv.base;
                }
                r.base_value = bases.empty() ? 0.0 : bases[0];
                r.mean_abs_phi.assign(em.p, 0.0);
                for (std::size_t i = 0; i < x.rows; ++i)
                  for (std::size_t j = 0; j < em.p; ++j)
                    r.mean_abs_phi[j] += std::fabs(r.phi(i, j));
                for (double& v : r.mean_abs_phi) v /= static_cast<double>(x.rows);
                r.ranking.resize(em.p);
                std::iota(r.ranking.begin(), r.ranking.end(), std::size_t{0});
                std::stable_sort(r.ranking.begin(), r.ranking.end(),
                                 [&](std::size_t a, std::size_t b) {
                                   return r.mean_abs_phi[a] > r.mean_abs_phi[b];
                                 });
                return r;
              }();
    std::printf("base=%.6f (%s mode)\n", report.base_value,
                report.exact ? "exact" : "sampled");
    for (std::size_t r : report.ranking)
      std::printf("  %-18s mean|phi|=%.6f\n", model.feature_names[r].c_str(),
                  report.mean_abs_phi[r]);
    if (!out_path.empty()) write_shap_csv(out_path, report, x, model.feature_names);
    if (!bar_path.empty()) {
      std::vector<std::string> labels;
      std::vector<double> values;
      for (std::size_t r : report.ranking) {
        labels.push_back(model.feature_names[r]);
        values.push_back(report.mean_abs_phi[r]);
      }
      svg::write_bar_plot(bar_path, labels, values, "mean |phi|");
    }
  });

  auto* ice_cmd = explain_cmd->add_subcommand("ice", "1-D ICE/PDP grid");
  std::string feature_name;
  int grid_size = 50;
  ice_cmd->add_option("model", model_path)->required();
  ice_cmd->add_option("csv", input)->required();
  ice_cmd->add_option("--schema", schema_path)->required();
  ice_cmd->add_option("--feature", feature_name)->required();
  ice_cmd->add_option("--grid", grid_size);
  ice_cmd->add_option("--tau", tau);
  ice_cmd->add_flag("--mean", use_mean);
  ice_cmd->add_option("--quantile-interp", interp_name);
  ice_cmd->add_option("--out", out_path, "ICE CSV");
  ice_cmd->add_option("--plot", plot_path, "ICE SVG");
  ice_cmd->callback([&] {
    QuantileForest model = load_model(model_path);
    TabularDataset d = load_data(input, schema_path);
    Matrix x = model_matrix(d, model);
    auto it = std::find(model.feature_names.begin(), model.feature_names.end(),
                        feature_name);
    if (it == model.feature_names.end())
      throw SchemaError("model has no feature: " + feature_name);
    ExplainModel em = use_mean
                          ? mean_model(model)
                          : quantile_model(model, QuantileLevel{tau},
                                           parse_interp(interp_name));
    IceGrid grid = ice_1d(em, x, it - model.feature_names.begin(), grid_size);
    if (grid.constant_feature)
      std::fprintf(stderr, "warning: %s is constant; single-point grid\n",
                   feature_name.c_str());
    if (!out_path.empty()) write_ice_csv(out_path, grid);
    if (!plot_path.empty()) svg::write_ice_plot(plot_path, grid, feature_name);
    std::printf("pdp over %zu grid points, %zu curves\n", grid.grid.size(),
                grid.curves.rows);
  });

  auto* pdp2_cmd = explain_cmd->add_subcommand("pdp2", "2-D PDP surface");
  std::vector<std::string> pair;
  pdp2_cmd->add_option("model", model_path)->required();
  pdp2_cmd->add_option("csv", input)->required();
  pdp2_cmd->add_option("--schema", schema_path)->required();
  pdp2_cmd->add_option("--features", pair, "two feature names")
      ->required()
      ->delimiter(',');
  pdp2_cmd->add_option("--tau", tau);
  pdp2_cmd->add_flag("--mean", use_mean);
  pdp2_cmd->add_option("--quantile-interp", interp_name);
  pdp2_cmd->add_option("--out", out_path, "surface CSV");
  pdp2_cmd->add_option("--plot", plot_path, "surface SVG");
  pdp2_cmd->callback([&] {
    if (pair.size() != 2)
      throw ValidationError("--features needs exactly two names");
    QuantileForest model = load_model(model_path);
    TabularDataset d = load_data(input, schema_path);
    Matrix x = model_matrix(d, model);
    auto idx = [&](const std::string& name) {
      auto it = std::find(model.feature_names.begin(), model.feature_names.end(),
                          name);
      if (it == model.feature_names.end())
        throw SchemaError("model has no feature: " + name);
      return static_cast<std::size_t>(it - model.feature_names.begin());
    };
    ExplainModel em = use_mean
                          ? mean_model(model)
                          : quantile_model(model, QuantileLevel{tau},
                                           parse_interp(interp_name));
    PdpSurface surface = pdp_2d(em, x, idx(pair[0]), idx(pair[1]));
    if (!out_path.empty()) write_pdp2_csv(out_path, surface);
    if (!plot_path.empty())
      svg::write_pdp2_plot(plot_path, surface, pair[0], pair[1]);
    std::printf("surface %zux%zu written\n", surface.grid_a.size(),
                surface.grid_b.size());
  });

  // --- supplement ---
  auto* supp = app.add_subcommand("supplement", "combined-data studies");
  supp->require_subcommand(1);

  auto* cmp_cmd = supp->add_subcommand("compare", "combined vs per-group models");
  cmp_cmd->add_option("csv", input)->required();
  add_common(cmp_cmd, true);
  cmp_cmd->add_option("--out", out_path, "report JSON");
  cmp_cmd->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    SplitComparison cmp = compare_combined_vs_split(d, target, seed, 5, 4, exclude);
    for (const auto& e : cmp.entries)
      std::printf("%-9s -> %-9s mse=%.6f rmse=%.6f r2=%s (n=%zu)\n",
                  e.train.c_str(), e.test.c_str(), e.metrics.mse, e.metrics.rmse,
                  e.metrics.r2 ? format_number(*e.metrics.r2).c_str() : "-",
                  e.n_test);
    if (!out_path.empty()) write_compare_json(out_path, cmp);
  });

  auto* ssel_cmd = supp->add_subcommand("select", "squared-loss Lasso selection");
  ssel_cmd->add_option("csv", input)->required();
  add_common(ssel_cmd, true);
  ssel_cmd->add_option("--repeats", repeats);
  ssel_cmd->add_option("--folds", folds);
  ssel_cmd->add_option("--lambda-count", lambda_count);
  ssel_cmd->add_option("--out", out_path, "path CSV");
  ssel_cmd->add_option("--plot", plot_path, "path SVG");
  ssel_cmd->callback([&] {
    TabularDataset d = load_data(input, schema_path);
    if (!d.group.empty()) {
      std::set<std::string> labels(d.group.begin(), d.group.end());
      d = add_indicator(d, *labels.begin());
    }
    Xy xy = build_xy(d, target, {}, exclude);
    auto grid = default_lambda_grid(xy.x, xy.y, false, QuantileLevel{0.5},
                                    lambda_count);
    SelectionResult sel =
        select_features(d, target, QuantileLevel{0.5}, L1Loss::squared, grid,
                        repeats, folds, seed, exclude);
    const PathPoint& chosen = sel.path[sel.chosen_index];
    std::printf("chosen lambda=%.6g features=%zu\n", chosen.lambda,
                sel.chosen_features.size());
    for (const auto& f : sel.chosen_features) std::printf("  %s\n", f.c_str());
    if (!out_path.empty()) write_path_csv(out_path, sel);
    if (!plot_path.empty()) svg::write_path_plot(plot_path, sel, "mean CV MSE");
  });

  // --- reproduce ---
  auto* rep_cmd = app.add_subcommand("reproduce", "full per-group pipeline");
  std::string config_path;
  PipelineConfig cfg;
  bool strict = false;
  rep_cmd->add_option("--config", config_path, "flat JSON config");
  auto* o_input = rep_cmd->add_option("--input", cfg.input);
  auto* o_schema = rep_cmd->add_option("--schema", cfg.schema_path);
  auto* o_target = rep_cmd->add_option("--target", cfg.target);
  auto* o_tau = rep_cmd->add_option("--tau", cfg.tau);
  auto* o_seed = rep_cmd->add_option("--seed", cfg.seed);
  auto* o_imputer = rep_cmd->add_option("--imputer", cfg.imputer);
  auto* o_outdir = rep_cmd->add_option("--out-dir", cfg.out_dir);
  auto* o_exclude = rep_cmd->add_option("--exclude", cfg.exclude);
  rep_cmd->add_flag("--strict", strict, "exit 4 when any target check fails");
  rep_cmd->callback([&] {
    PipelineConfig c;
    if (!config_path.empty()) c = load_config(config_path);
    if (o_input->count()) c.input = cfg.input;
    if (o_schema->count()) c.schema_path = cfg.schema_path;
    if (o_target->count()) c.target = cfg.target;
    if (o_tau->count()) c.tau = cfg.tau;
    if (o_seed->count()) { c.seed = cfg.seed; c.seed_set = true; }
    if (o_imputer->count()) c.imputer = cfg.imputer;
    if (o_outdir->count()) c.out_dir = cfg.out_dir;
    if (o_exclude->count()) c.exclude = cfg.exclude;
    c.strict = strict;
    ReproduceResult result = reproduce(c);
    std::printf("run dir: %s\n", result.run_dir.c_str());
    std::printf("checks: %d/%d passed\n", result.checks_total - result.checks_failed,
                result.checks_total);
    if (c.strict && result.checks_failed > 0) std::exit(4);
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const StageError& e) {
    std::fprintf(stderr, "stage failure: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

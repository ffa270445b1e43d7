#include "qrfx/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "qrfx/csv.hpp"
#include "qrfx/cv.hpp"
#include "qrfx/error.hpp"
#include "qrfx/forest.hpp"
#include "qrfx/rng.hpp"
#include "qrfx/svg.hpp"

namespace qrfx {
namespace fs = std::filesystem;
using nlohmann::json;

void PipelineConfig::validate() const {
  if (input.empty()) throw ValidationError("config: input path required");
  if (schema_path.empty()) throw ValidationError("config: schema path required");
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("config: tau must be in (0,1)");
  if (!seed_set) throw ValidationError("config: seed required (no wall-clock default)");
  if (lambda_count < 1) throw ValidationError("config: lambda_count >= 1");
  if (imputer != "auto" && imputer != "mean" && imputer != "knn" &&
      imputer != "bayes" && imputer != "rf")
    throw ValidationError("config: imputer must be mean|knn|bayes|rf|auto");
}

PipelineConfig load_config(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw ParseError("cannot open config file: " + json_path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("config JSON: ") + e.what());
  }

  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "input") c.input = value.get<std::string>();
    else if (key == "schema") c.schema_path = value.get<std::string>();
    else if (key == "target") c.target = value.get<std::string>();
    else if (key == "tau") c.tau = value.get<double>();
    else if (key == "seed") { c.seed = value.get<std::uint64_t>(); c.seed_set = true; }
    else if (key == "imputer") c.imputer = value.get<std::string>();
    else if (key == "lambda_count") c.lambda_count = value.get<int>();
    else if (key == "select_repeats") c.select_repeats = value.get<int>();
    else if (key == "select_folds") c.select_folds = value.get<int>();
    else if (key == "tune_folds") c.tune_folds = value.get<int>();
    else if (key == "impute_outer_k") c.impute_outer_k = value.get<int>();
    else if (key == "impute_inner_k") c.impute_inner_k = value.get<int>();
    else if (key == "out_dir") c.out_dir = value.get<std::string>();
    else if (key == "exclude") c.exclude = value.get<std::vector<std::string>>();
    else if (key == "strict") c.strict = value.get<bool>();
    else if (key == "quantile_interp") {
      std::string s = value.get<std::string>();
      if (s == "lower") c.interp = QuantileInterp::lower;
      else if (s == "linear") c.interp = QuantileInterp::linear;
      else throw ValidationError("config: quantile_interp must be lower|linear");
    } else {
      throw ValidationError("config: unknown key: " + key);
    }
  }
  return c;
}

void write_stats_csv(const std::string& path, const TabularDataset& d) {
  SummaryStats stats = summarize(d);
  CsvTable t;
  t.header = {"column", "unit", "mean", "sd", "missing_pct", "n_obs"};
  for (std::size_t j = 0; j < d.n_cols(); ++j) {
    const ColumnStats& cs = stats.columns[j];
    t.rows.push_back({d.schema[j].name, d.schema[j].unit,
                      cs.mean ? format_number(*cs.mean) : "undefined",
                      cs.sd ? format_number(*cs.sd) : "undefined",
                      format_number(cs.miss_pct), std::to_string(cs.n_obs)});
  }
  write_csv(path, t);
}

void write_impute_report_json(const std::string& path,
                              const ImputationEvalReport& report) {
  json j;
  j["methods"] = json::array();
  for (const auto& [method, metrics] : report.methods) {
    j["methods"].push_back({{"method", impute_method_name(method)},
                            {"mse", metrics.mse},
                            {"rmse", metrics.rmse},
                            {"r2", metrics.r2}});
  }
  j["best_mse"] = impute_method_name(report.best_mse);
  j["best_rmse"] = impute_method_name(report.best_rmse);
  j["best_r2"] = impute_method_name(report.best_r2);
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_path_csv(const std::string& path, const SelectionResult& sel) {
  CsvTable t;
  t.header = {"lambda", "s", "mean_loss", "nonzero_count"};
  for (const auto& name : sel.feature_names) t.header.push_back(name);
  for (const auto& pt : sel.path) {
    std::vector<std::string> row = {format_number(pt.lambda), format_number(pt.s),
                                    format_number(pt.mean_cv_loss),
                                    std::to_string(pt.nonzero_count)};
    for (double c : pt.mean_coefficients) row.push_back(format_number(c));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_shap_csv(const std::string& path, const ShapReport& report,
                    const Matrix& x, const std::vector<std::string>& names) {
  CsvTable t;
  t.header = {"feature", "sample", "phi", "feature_value"};
  for (std::size_t j = 0; j < report.phi.cols; ++j)
    for (std::size_t i = 0; i < report.phi.rows; ++i)
      t.rows.push_back({names[j], std::to_string(i), format_number(report.phi(i, j)),
                        format_number(x(i, j))});
  write_csv(path, t);
}

void write_waterfall_csv(const std::string& path, const WaterfallRecord& rec,
                         const std::vector<std::string>& names) {
  CsvTable t;
  t.header = {"feature", "phi", "feature_value"};
  for (const auto& e : rec.entries)
    t.rows.push_back({names[e.feature], format_number(e.phi),
                      format_number(e.value)});
  t.rows.push_back({"__base__", format_number(rec.base), ""});
  t.rows.push_back({"__prediction__", format_number(rec.prediction), ""});
  write_csv(path, t);
}

void write_ice_csv(const std::string& path, const IceGrid& grid) {
  CsvTable t;
  t.header = {"grid", "pdp"};
  for (std::size_t i = 0; i < grid.curves.rows; ++i)
    t.header.push_back("sample_" + std::to_string(i));
  for (std::size_t g = 0; g < grid.grid.size(); ++g) {
    std::vector<std::string> row = {format_number(grid.grid[g]),
                                    format_number(grid.pdp[g])};
    for (std::size_t i = 0; i < grid.curves.rows; ++i)
      row.push_back(format_number(grid.curves(i, g)));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

void write_pdp2_csv(const std::string& path, const PdpSurface& surface) {
  CsvTable t;
  t.header = {"grid_a", "grid_b", "pdp"};
  for (std::size_t a = 0; a < surface.grid_a.size(); ++a)
    for (std::size_t b = 0; b < surface.grid_b.size(); ++b)
      t.rows.push_back({format_number(surface.grid_a[a]),
                        format_number(surface.grid_b[b]),
                        format_number(surface.surface(a, b))});
  write_csv(path, t);
}

void write_compare_json(const std::string& path, const SplitComparison& cmp) {
  json j;
  j["entries"] = json::array();
  for (const auto& e : cmp.entries) {
    json row = {{"train", e.train}, {"test", e.test}, {"n_test", e.n_test},
                {"mse", e.metrics.mse}, {"rmse", e.metrics.rmse}};
    if (e.metrics.r2) row["r2"] = *e.metrics.r2;
    j["entries"].push_back(std::move(row));
  }
  j["combined_features"] = cmp.combined_features;
  for (int g = 0; g < 2; ++g)
    j["group_features"][cmp.group_labels[g]] = cmp.group_features[g];
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

namespace {

// Reference targets checked into the run manifest, keyed by group label.
struct GroupTargets {
  bool any = false;
  int feat_lo = 0, feat_hi = 0;
  int depth_lo = 2, depth_hi = 4;
  double pinball_lo = 0.0, pinball_hi = 0.0;
  std::string top1;                           // empty: skip
  std::vector<std::string> top3_set;          // empty: skip
  std::string best_row_top1;                  // empty: skip
  std::vector<std::string> best_row_top3_has; // empty: skip
};

GroupTargets targets_for(const std::string& label) {
  GroupTargets t;
  if (label == "Male") {
    t.any = true;
    t.feat_lo = 15;
    t.feat_hi = 23;
    t.pinball_lo = 0.0287 * 0.8;
    t.pinball_hi = 0.0287 * 1.2;
    t.top1 = "v_H_S1";
    t.best_row_top1 = "v_H_S1";
  } else if (label == "Female") {
    t.any = true;
    t.feat_lo = 7;
    t.feat_hi = 13;
    t.pinball_lo = 0.0333 * 0.8;
    t.pinball_hi = 0.0333 * 1.2;
    t.top3_set = {"v_H_S1", "v_H_S2", "v_H_S3"};
    t.best_row_top3_has = {"r_stepDiff_S21", "r_stepDiff_S32"};
  }
  return t;
}

std::int64_t elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - since)
      .count();
}

void add_check(json& checks, const std::string& name, bool pass,
               const std::string& detail, int& total, int& failed) {
  checks.push_back({{"check", name}, {"status", pass ? "PASS" : "FAIL"},
                    {"detail", detail}});
  ++total;
  if (!pass) ++failed;
}

ImputeMethod method_from_config(const std::string& s) {
  if (s == "mean") return ImputeMethod::mean;
  if (s == "knn") return ImputeMethod::knn;
  if (s == "bayes") return ImputeMethod::bayes_iterative;
  return ImputeMethod::forest_iterative;
}

}  // namespace

ReproduceResult reproduce(const PipelineConfig& config) {
  config.validate();

  fs::create_directories(config.out_dir);
  auto schema = load_schema(config.schema_path);
  TabularDataset all = load_csv_dataset(config.input, schema);
  write_stats_csv((fs::path(config.out_dir) / "stats.csv").string(), all);

  std::map<std::string, TabularDataset> groups;
  if (all.group.empty())
    groups.emplace("all", all);
  else
    groups = split_by_group(all);

  json manifest;
  manifest["seed"] = config.seed;
  manifest["tau"] = config.tau;
  manifest["target"] = config.target;
  manifest["imputer"] = config.imputer;
  manifest["exclude"] = config.exclude;
  manifest["version"] = 1;
  json checks = json::array();
  int total = 0, failed = 0;

  std::size_t gidx = 0;
  for (auto& [label, d] : groups) {
    fs::path dir = fs::path(config.out_dir) / label;
    fs::create_directories(dir);
    json gm;
    auto t0 = std::chrono::steady_clock::now();
    GroupTargets targets = targets_for(label);
    const std::uint64_t gseed = derive_seed(config.seed, "group", gidx++);

    // --- impute-eval + impute ---
    ImputeMethod method;
    try {
      ImputeOptions opt;
      opt.seed = derive_seed(gseed, "impute-eval");
      ImputationEvalReport eval =
          evaluate_imputers(d, config.target, config.impute_outer_k,
                            config.impute_inner_k, opt.seed, config.exclude, opt);
      write_impute_report_json((dir / "impute_eval.json").string(), eval);
      method = config.imputer == "auto" ? eval.best_mse
                                        : method_from_config(config.imputer);
      gm["impute_eval_winner"] = impute_method_name(eval.best_mse);
    } catch (const Error& e) {
      throw StageError("impute-eval[" + label + "]", e.what());
    }

    TabularDataset imputed;
    try {
      ImputeOptions opt;
      opt.seed = derive_seed(gseed, "impute");
      imputed = fit_transform(d, method, opt).second;
      save_csv_dataset((dir / "imputed.csv").string(), imputed);
      gm["imputer"] = impute_method_name(method);
    } catch (const Error& e) {
      throw StageError("impute[" + label + "]", e.what());
    }

    // Rows whose target was observed drive all supervised stages.
    const std::size_t tgt = imputed.target_index();
    std::vector<std::size_t> obs_rows;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
      if (!d.is_missing(i, tgt)) obs_rows.push_back(i);
    TabularDataset sup = subset_rows(imputed, obs_rows);

    // --- select ---
    SelectionResult sel;
    try {
      std::vector<std::size_t> feats;
      for (std::size_t j : sup.feature_indices(config.exclude))
        if (j != tgt) feats.push_back(j);
      Matrix x(sup.n_rows(), feats.size());
      std::vector<double> y(sup.n_rows());
      for (std::size_t i = 0; i < sup.n_rows(); ++i) {
        y[i] = sup.at(i, tgt);
        for (std::size_t c = 0; c < feats.size(); ++c)
          x(i, c) = sup.at(i, feats[c]);
      }
      auto grid = default_lambda_grid(x, y, true, QuantileLevel{config.tau},
                                      config.lambda_count);
      sel = select_features(sup, config.target, QuantileLevel{config.tau},
                            L1Loss::pinball, grid, config.select_repeats,
                            config.select_folds, derive_seed(gseed, "select"),
                            config.exclude);
      write_path_csv((dir / "path.csv").string(), sel);
      svg::write_path_plot((dir / "path.svg").string(), sel, "mean CV pinball");
      gm["selected_features"] = sel.chosen_features;
      gm["selected_count"] = sel.chosen_features.size();
      gm["selected_s"] = sel.path[sel.chosen_index].s;
    } catch (const Error& e) {
      throw StageError("select[" + label + "]", e.what());
    }
    if (sel.chosen_features.empty())
      throw StageError("select[" + label + "]", "no features selected");

    // --- tune + train ---
    Matrix xsel(sup.n_rows(), sel.chosen_features.size());
    std::vector<double> ysel(sup.n_rows());
    {
      std::vector<std::size_t> cols;
      for (const auto& name : sel.chosen_features)
        cols.push_back(static_cast<std::size_t>(sup.column_index(name)));
      for (std::size_t i = 0; i < sup.n_rows(); ++i) {
        ysel[i] = sup.at(i, tgt);
        for (std::size_t c = 0; c < cols.size(); ++c)
          xsel(i, c) = sup.at(i, cols[c]);
      }
    }
    QuantileForest model;
    TuneResult tune;
    try {
      tune = tune_forest(xsel, ysel, QuantileLevel{config.tau},
                         default_hyper_grid(xsel.cols), config.tune_folds,
                         derive_seed(gseed, "tune"));
      model = fit_forest(xsel, ysel, tune.best, derive_seed(gseed, "train"),
                         sel.chosen_features);
      save_model(model, (dir / "model.json").string());
      gm["tuned"] = {{"n_estimators", tune.best.n_estimators},
                     {"max_depth", tune.best.max_depth},
                     {"max_features", tune.best.max_features},
                     {"cv_pinball", tune.mean_pinball}};
    } catch (const Error& e) {
      throw StageError("tune/train[" + label + "]", e.what());
    }

    // --- explain ---
    ShapReport shap;
    WaterfallRecord waterfall;
    std::size_t best_row = 0;
    try {
      ExplainModel em = quantile_model(model, QuantileLevel{config.tau},
                                       config.interp);
      shap = shap_global(em, xsel, xsel, 2000, derive_seed(gseed, "shap"));
      write_shap_csv((dir / "shap.csv").string(), shap, xsel,
                     sel.chosen_features);
      std::vector<std::string> bar_labels;
      std::vector<double> bar_values;
      for (std::size_t r : shap.ranking) {
        bar_labels.push_back(sel.chosen_features[r]);
        bar_values.push_back(shap.mean_abs_phi[r]);
      }
      svg::write_bar_plot((dir / "shap_bar.svg").string(), bar_labels, bar_values,
                          "mean |phi| (" + label + ")");

      for (std::size_t i = 1; i < ysel.size(); ++i)
        if (ysel[i] > ysel[best_row]) best_row = i;
      std::span<const double> row(&xsel.data[best_row * xsel.cols], xsel.cols);
      waterfall = shap_individual(em, row, xsel);
      write_waterfall_csv((dir / "waterfall.csv").string(), waterfall,
                          sel.chosen_features);
      svg::write_waterfall_plot((dir / "waterfall.svg").string(), waterfall,
                                sel.chosen_features);
      gm["best_row_target"] = ysel[best_row];

      // ICE on the two globally top-ranked features; 2-D PDP on the
      // (v_H_S1, a_knee_TD) pair when both survive selection, otherwise on
      // the top two.
      std::vector<std::size_t> ice_feats;
      for (std::size_t k = 0; k < shap.ranking.size() && ice_feats.size() < 2; ++k)
        ice_feats.push_back(shap.ranking[k]);
      auto find_sel = [&](const std::string& name) {
        auto it = std::find(sel.chosen_features.begin(),
                            sel.chosen_features.end(), name);
        return it == sel.chosen_features.end()
                   ? static_cast<std::ptrdiff_t>(-1)
                   : it - sel.chosen_features.begin();
      };
      auto vh = find_sel("v_H_S1"), ak = find_sel("a_knee_TD");
      if (vh >= 0 &&
          std::find(ice_feats.begin(), ice_feats.end(),
                    static_cast<std::size_t>(vh)) == ice_feats.end())
        ice_feats.push_back(static_cast<std::size_t>(vh));
      for (std::size_t f : ice_feats) {
        IceGrid ig = ice_1d(em, xsel, f);
        const std::string& name = sel.chosen_features[f];
        write_ice_csv((dir / ("ice_" + name + ".csv")).string(), ig);
        svg::write_ice_plot((dir / ("ice_" + name + ".svg")).string(), ig, name);
      }
      std::size_t pa = ice_feats[0];
      std::size_t pb = ice_feats.size() > 1 ? ice_feats[1] : ice_feats[0];
      if (vh >= 0 && ak >= 0) {
        pa = static_cast<std::size_t>(vh);
        pb = static_cast<std::size_t>(ak);
      }
      if (pa != pb) {
        PdpSurface ps = pdp_2d(em, xsel, pa, pb);
        std::string tag =
            sel.chosen_features[pa] + "_" + sel.chosen_features[pb];
        write_pdp2_csv((dir / ("pdp2_" + tag + ".csv")).string(), ps);
        svg::write_pdp2_plot((dir / ("pdp2_" + tag + ".svg")).string(), ps,
                             sel.chosen_features[pa], sel.chosen_features[pb]);
      }

      std::vector<std::pair<double, double>> qmarks;
      std::vector<double> ysorted = ysel;
      std::sort(ysorted.begin(), ysorted.end());
      for (double tq : {0.5, config.tau}) {
        std::size_t k = static_cast<std::size_t>(
            std::ceil(tq * static_cast<double>(ysorted.size()) - 1e-12));
        k = std::min(std::max<std::size_t>(k, 1), ysorted.size());
        qmarks.emplace_back(tq, ysorted[k - 1]);
      }
      svg::write_hist_plot((dir / "target_hist.svg").string(), ysel, 12, qmarks,
                           config.target + " (" + label + ")");
    } catch (const Error& e) {
      throw StageError("explain[" + label + "]", e.what());
    }

    // --- PASS/FAIL table ---
    if (targets.any) {
      int count = static_cast<int>(sel.chosen_features.size());
      add_check(checks, label + ": selected feature count",
                count >= targets.feat_lo && count <= targets.feat_hi,
                std::to_string(count) + " in [" + std::to_string(targets.feat_lo) +
                    "," + std::to_string(targets.feat_hi) + "]",
                total, failed);
      add_check(checks, label + ": tuned max_depth",
                tune.best.max_depth >= targets.depth_lo &&
                    tune.best.max_depth <= targets.depth_hi,
                std::to_string(tune.best.max_depth) + " in [2,4]", total, failed);
      add_check(checks, label + ": CV pinball",
                tune.mean_pinball >= targets.pinball_lo &&
                    tune.mean_pinball <= targets.pinball_hi,
                format_number(tune.mean_pinball) + " in [" +
                    format_number(targets.pinball_lo) + "," +
                    format_number(targets.pinball_hi) + "]",
                total, failed);
      if (!targets.top1.empty()) {
        const std::string& top = sel.chosen_features[shap.ranking[0]];
        add_check(checks, label + ": SHAP top-1", top == targets.top1,
                  top + " vs " + targets.top1, total, failed);
        double phi = shap.mean_abs_phi[shap.ranking[0]];
        add_check(checks, label + ": SHAP top-1 mean|phi|",
                  phi >= 0.05 && phi <= 0.09,
                  format_number(phi) + " in [0.05,0.09]", total, failed);
      }
      if (!targets.top3_set.empty()) {
        std::set<std::string> got, want(targets.top3_set.begin(),
                                        targets.top3_set.end());
        for (std::size_t k = 0; k < 3 && k < shap.ranking.size(); ++k)
          got.insert(sel.chosen_features[shap.ranking[k]]);
        std::string detail;
        for (const auto& s : got) detail += s + " ";
        add_check(checks, label + ": SHAP top-3 set", got == want, detail, total,
                  failed);
      }
      if (!targets.best_row_top1.empty()) {
        const std::string& top =
            sel.chosen_features[waterfall.entries.front().feature];
        add_check(checks, label + ": best-jump top-1",
                  top == targets.best_row_top1, top, total, failed);
      }
      if (!targets.best_row_top3_has.empty()) {
        std::set<std::string> got;
        for (std::size_t k = 0; k < 3 && k < waterfall.entries.size(); ++k)
          got.insert(sel.chosen_features[waterfall.entries[k].feature]);
        bool ok = true;
        std::string detail;
        for (const auto& s : targets.best_row_top3_has)
          if (!got.count(s)) { ok = false; detail += "missing " + s + " "; }
        for (const auto& s : got) detail += s + " ";
        add_check(checks, label + ": best-jump top-3 contains", ok, detail, total,
                  failed);
      }
    }

    gm["elapsed_ms"] = elapsed_ms(t0);
    manifest["groups"][label] = std::move(gm);
  }

  manifest["checks"] = std::move(checks);
  manifest["checks_total"] = total;
  manifest["checks_failed"] = failed;
  std::ofstream out(fs::path(config.out_dir) / "manifest.json");
  if (!out) throw Error("cannot write manifest.json");
  out << manifest.dump(2) << '\n';

  return ReproduceResult{config.out_dir, total, failed};
}

}  // namespace qrfx

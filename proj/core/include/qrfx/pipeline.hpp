#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrfx/compare.hpp"
#include "qrfx/dataset.hpp"
#include "qrfx/error.hpp"
#include "qrfx/explain.hpp"
#include "qrfx/impute.hpp"
#include "qrfx/l1_quantile.hpp"

namespace qrfx {

// Flat configuration; every field maps 1:1 to a JSON key and a CLI flag.
// The seed has no wall-clock default: callers must set it.
struct PipelineConfig {
  std::string input;
  std::string schema_path;
  std::string target = "d_resEffe";
  double tau = 0.9;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string imputer = "auto";  // mean | knn | bayes | rf | auto
  int lambda_count = 60;
  int select_repeats = 10;
  int select_folds = 3;
  int tune_folds = 4;
  int impute_outer_k = 4;
  int impute_inner_k = 3;
  std::string out_dir = "run";
  std::vector<std::string> exclude = {"d_resOffi"};
  bool strict = false;
  QuantileInterp interp = QuantileInterp::lower;

  void validate() const;
};

PipelineConfig load_config(const std::string& json_path);

struct ReproduceResult {
  std::string run_dir;
  int checks_total = 0;
  int checks_failed = 0;
};

// Runs the full per-group pipeline (impute-eval, impute, select, tune,
// train, SHAP, ICE/PDP) and writes manifest.json with a PASS/FAIL table.
// Throws StageError naming the failing stage; partial outputs remain.
ReproduceResult reproduce(const PipelineConfig& config);

struct StageError : Error {
  std::string stage;
  StageError(std::string stage_name, const std::string& cause)
      : Error(stage_name + ": " + cause), stage(std::move(stage_name)) {}
};

// Report/CSV writers shared by the subcommands and `reproduce`.
void write_stats_csv(const std::string& path, const TabularDataset& d);
void write_impute_report_json(const std::string& path,
                              const ImputationEvalReport& report);
void write_path_csv(const std::string& path, const SelectionResult& sel);
void write_shap_csv(const std::string& path, const ShapReport& report,
                    const Matrix& x, const std::vector<std::string>& names);
void write_waterfall_csv(const std::string& path, const WaterfallRecord& rec,
                         const std::vector<std::string>& names);
void write_ice_csv(const std::string& path, const IceGrid& grid);
void write_pdp2_csv(const std::string& path, const PdpSurface& surface);
void write_compare_json(const std::string& path, const SplitComparison& cmp);

}  // namespace qrfx

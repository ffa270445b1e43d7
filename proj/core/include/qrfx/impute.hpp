#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qrfx/dataset.hpp"
#include "qrfx/forest.hpp"

namespace qrfx {

enum class ImputeMethod { mean, knn, bayes_iterative, forest_iterative };

const char* impute_method_name(ImputeMethod m);
ImputeMethod impute_method_from_string(const std::string& s);

struct ImputeOptions {
  int knn_k = 5;
  int rounds = 10;
  double tol = 1e-3;
  int imputer_forest_trees = 100;
  std::uint64_t seed = 0;
};

struct ImputeWarning {
  std::string column;
  std::string message;
};

// Fitted on a training dataset; transform never alters observed entries
// and always returns an all-false missing mask.
class FittedImputer {
 public:
  ImputeMethod method = ImputeMethod::mean;
  std::vector<ColumnSpec> schema;
  std::vector<double> col_means;  // observed training column means
  std::vector<ImputeWarning> warnings;

  // knn state
  int knn_k = 5;
  std::vector<double> z_mean, z_sd;  // training z-score stats
  std::vector<double> train_values;  // row-major training copy
  std::vector<std::uint8_t> train_missing;
  std::size_t train_rows = 0;

  // iterative state: one frozen regressor per column, replayed on new data
  struct ColumnModel {
    bool valid = false;
    bool is_forest = false;
    double intercept = 0.0;
    std::vector<double> weights;  // bayes ridge, over the other columns
    std::shared_ptr<QuantileForest> forest;
  };
  std::vector<ColumnModel> col_models;
  std::vector<std::size_t> col_order;  // ascending missing rate at fit time
  int rounds = 10;
  double tol = 1e-3;

  // Per-sweep max absolute change recorded during fitting.
  std::vector<double> sweep_changes;

  TabularDataset transform(const TabularDataset& d) const;
};

std::pair<FittedImputer, TabularDataset> fit_transform_mean(const TabularDataset& d);

std::pair<FittedImputer, TabularDataset> fit_transform_knn(const TabularDataset& d,
                                                           int k);

enum class IterativeRegressor { bayes_ridge, forest };

std::pair<FittedImputer, TabularDataset> fit_transform_iterative(
    const TabularDataset& d, IterativeRegressor regressor, int rounds, double tol,
    std::uint64_t seed, int forest_trees = 100);

std::pair<FittedImputer, TabularDataset> fit_transform(const TabularDataset& d,
                                                       ImputeMethod method,
                                                       const ImputeOptions& opt);

struct MethodMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
};

struct ImputationEvalReport {
  std::vector<std::pair<ImputeMethod, MethodMetrics>> methods;  // four rows
  ImputeMethod best_mse = ImputeMethod::mean;
  ImputeMethod best_rmse = ImputeMethod::mean;
  ImputeMethod best_r2 = ImputeMethod::mean;
};

// Nested CV: imputers fit on outer-train only, a mean random forest tuned
// on the inner folds, scored on outer-test rows whose target is observed.
ImputationEvalReport evaluate_imputers(const TabularDataset& d,
                                       const std::string& target, int outer_k,
                                       int inner_k, std::uint64_t seed,
                                       const std::vector<std::string>& exclude = {},
                                       const ImputeOptions& opt = {});

// Inner tuning grid used by the evaluator.
HyperGrid impute_eval_grid(std::size_t p);

}  // namespace qrfx

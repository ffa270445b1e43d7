#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrfx/dataset.hpp"
#include "qrfx/l1_quantile.hpp"
#include "qrfx/metrics.hpp"

namespace qrfx {

// Combined-vs-per-group model comparison under gender-stratified outer CV
// with inner-CV hyperparameter tuning of mean forests.
struct SplitComparisonEntry {
  std::string train;  // "combined" or a group label
  std::string test;
  RegressionMetrics metrics;  // over pooled outer-fold predictions
  std::size_t n_test = 0;
};

struct SplitComparison {
  std::vector<SplitComparisonEntry> entries;
  // Squared-loss Lasso feature sets used by each model.
  std::vector<std::string> combined_features;  // includes the group indicator
  std::vector<std::string> group_features[2];  // ordered by group label
  std::string group_labels[2];
};

// Requires a fully imputed dataset with a two-label group column. Feature
// sets come from select_features under squared loss; the combined model
// additionally sees a 0/1 indicator for the second group label.
SplitComparison compare_combined_vs_split(const TabularDataset& imputed,
                                          const std::string& target,
                                          std::uint64_t seed, int outer_k = 5,
                                          int inner_k = 4,
                                          const std::vector<std::string>& exclude = {});

}  // namespace qrfx

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrfx/linalg.hpp"
#include "qrfx/metrics.hpp"
#include "qrfx/rng.hpp"

namespace qrfx {

struct ForestHyper {
  int n_estimators = 100;
  int max_depth = 3;
  int max_features = 1;
  int min_samples_leaf = 1;
  int min_samples_split = 2;
};

struct HyperGrid {
  std::vector<int> n_estimators;
  std::vector<int> max_depth;
  std::vector<int> max_features;
};

// Default grid: brackets 100/3/6, 100/3/1 and 200/9/6. max_features is
// clipped to [1, p] and deduplicated at tune time.
HyperGrid default_hyper_grid(std::size_t p);

// Flat node storage; node 0 is the root. Internal nodes route
// x[feature] <= threshold to the left child. Leaves keep the in-bag
// training row ids (with multiplicity) and their targets.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_mean = 0.0;
  std::vector<int> rows;
  std::vector<double> targets;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;
};

enum class QuantileInterp { lower, linear };

class QuantileForest {
 public:
  ForestHyper hyper;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  std::vector<Tree> trees;
  std::vector<double> y_train;  // training targets indexed by row id

  std::size_t n_features() const { return feature_names.size(); }

  double predict_mean(std::span<const double> x) const;
  double predict_quantile(std::span<const double> x, QuantileLevel tau,
                          QuantileInterp interp = QuantileInterp::lower) const;

  // Meinshausen weights per training row; nonnegative, sum to 1.
  void weights_at(std::span<const double> x, std::span<double> w) const;

  // Rebuilds prediction caches after direct member mutation (load path).
  void finalize();

 private:
  std::vector<std::size_t> sorted_order_;  // row ids ascending by y_train
  int leaf_index(const Tree& tree, std::span<const double> x) const;
};

// Single CART regression tree on the given rows (ids may repeat for
// bootstrap multiplicity). Greedy variance-reduction splits; at each node
// max_features features are sampled without replacement from rng.
Tree fit_tree(const Matrix& x, const std::vector<double>& y,
              const std::vector<int>& rows, const ForestHyper& hyper, Rng& rng);

QuantileForest fit_forest(const Matrix& x, const std::vector<double>& y,
                          const ForestHyper& hyper, std::uint64_t seed,
                          std::vector<std::string> feature_names = {});

struct TuneResult {
  ForestHyper best;
  double mean_pinball = 0.0;
};

// Exhaustive grid search scored by fold-mean held-out pinball at tau.
// Ties break toward fewer trees, then smaller depth, then fewer features.
TuneResult tune_forest(const Matrix& x, const std::vector<double>& y,
                       QuantileLevel tau, const HyperGrid& grid, int folds,
                       std::uint64_t seed);

// Same protocol scored by held-out MSE of mean predictions (used by the
// imputation evaluator and the combined-vs-split study).
TuneResult tune_mean_forest(const Matrix& x, const std::vector<double>& y,
                            const HyperGrid& grid, int folds, std::uint64_t seed);

void save_model(const QuantileForest& f, const std::string& path);
QuantileForest load_model(const std::string& path);

}  // namespace qrfx

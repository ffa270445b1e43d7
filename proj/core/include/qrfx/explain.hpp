#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qrfx/forest.hpp"
#include "qrfx/linalg.hpp"

namespace qrfx {

// Any scalar predictor over p features can be explained; the pipeline
// plugs in the QRF tau-quantile (its default) or mean prediction.
struct ExplainModel {
  std::size_t p = 0;
  std::function<double(std::span<const double>)> f;
};

ExplainModel quantile_model(const QuantileForest& forest, QuantileLevel tau,
                            QuantileInterp interp = QuantileInterp::lower);
ExplainModel mean_model(const QuantileForest& forest);

inline constexpr std::size_t kShapExactMaxFeatures = 20;

struct ShapValues {
  std::vector<double> phi;
  double base = 0.0;  // mean background prediction, v(empty set)
};

// Interventional Shapley values by full subset enumeration (p <= 20).
// v(S) substitutes off-coalition features from each background row and
// averages.
ShapValues shap_exact(const ExplainModel& model, std::span<const double> x,
                      const Matrix& background);

// Antithetic permutation-sampling estimator of the same values;
// deterministic per seed, additive by construction.
ShapValues shap_sampled(const ExplainModel& model, std::span<const double> x,
                        const Matrix& background, int permutations,
                        std::uint64_t seed);

struct ShapReport {
  double base_value = 0.0;
  Matrix phi;                          // n x p
  std::vector<double> mean_abs_phi;    // per feature
  std::vector<std::size_t> ranking;    // feature indices, descending mean|phi|
  bool exact = true;
};

ShapReport shap_global(const ExplainModel& model, const Matrix& x,
                       const Matrix& background, int sampled_permutations = 2000,
                       std::uint64_t seed = 0);

struct WaterfallEntry {
  std::size_t feature = 0;
  double phi = 0.0;
  double value = 0.0;  // the explained row's feature value
};

struct WaterfallRecord {
  std::vector<WaterfallEntry> entries;  // descending |phi|
  double base = 0.0;
  double prediction = 0.0;
};

WaterfallRecord shap_individual(const ExplainModel& model, std::span<const double> x,
                                const Matrix& background);

struct IceGrid {
  std::size_t feature = 0;
  std::vector<double> grid;       // strictly increasing
  Matrix curves;                  // n x grid_size
  std::vector<double> pdp;        // pointwise mean of curves
  std::vector<double> sample_x;   // observed feature values, for overlays
  std::vector<double> sample_pred;
  bool constant_feature = false;
};

IceGrid ice_1d(const ExplainModel& model, const Matrix& x, std::size_t feature,
               int grid_size = 50);

struct PdpSurface {
  std::size_t feature_a = 0, feature_b = 0;
  std::vector<double> grid_a, grid_b;
  Matrix surface;                 // grid_a.size() x grid_b.size()
  std::vector<double> sample_a, sample_b;  // scatter overlay
};

PdpSurface pdp_2d(const ExplainModel& model, const Matrix& x, std::size_t feature_a,
                  std::size_t feature_b, int grid_a = 25, int grid_b = 25);

}  // namespace qrfx

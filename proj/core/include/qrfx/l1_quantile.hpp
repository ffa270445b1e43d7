#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qrfx/dataset.hpp"
#include "qrfx/linalg.hpp"
#include "qrfx/metrics.hpp"

namespace qrfx {

// Affine model fit under pinball or squared loss with an L1 penalty.
// Coefficients live on the standardized-feature scale; predict() applies
// the stored standardization to raw inputs.
struct LinearQuantileModel {
  double beta0 = 0.0;
  std::vector<double> beta;
  QuantileLevel tau{0.5};
  double l1_norm = 0.0;  // sum |beta_j|
  std::vector<double> feat_mean, feat_sd;

  double predict(std::span<const double> x_raw) const;
  // Coefficient for feature j on the raw (unstandardized) input scale.
  double raw_coefficient(std::size_t j) const;
};

// Penalized objective (1/n) sum rho_tau(y - b0 - b.x) + lambda sum |b|,
// evaluated with the exact (unsmoothed) pinball loss.
double l1_pinball_objective(const LinearQuantileModel& m, const Matrix& x_raw,
                            std::span<const double> y, double lambda);

// Coordinate descent on a smoothed pinball loss, smoothing width annealed
// 1e-2 -> 1e-6, then exact closed-form re-optimization of the intercept.
LinearQuantileModel fit_l1_pinball(const Matrix& x, std::span<const double> y,
                                   QuantileLevel tau, double lambda,
                                   std::uint64_t seed);

// Standard Lasso via cyclic coordinate descent with soft-thresholding.
LinearQuantileModel fit_l1_squared(const Matrix& x, std::span<const double> y,
                                   double lambda, std::uint64_t seed);

// Smallest lambda for which every slope is zero.
double lambda_max(const Matrix& x, std::span<const double> y, bool pinball_loss,
                  QuantileLevel tau);

// 60 log-spaced points from lambda_max down to 1e-3 * lambda_max.
std::vector<double> default_lambda_grid(const Matrix& x, std::span<const double> y,
                                        bool pinball_loss, QuantileLevel tau,
                                        int count = 60);

struct PathPoint {
  double lambda = 0.0;
  double s = 0.0;  // l1 norm of the averaged coefficients
  double mean_cv_loss = 0.0;
  std::vector<double> mean_coefficients;  // standardized scale
  int nonzero_count = 0;
};

enum class L1Loss { pinball, squared };

struct SelectionResult {
  std::vector<PathPoint> path;          // in grid order
  std::size_t chosen_index = 0;         // minimum mean CV loss
  std::vector<std::string> chosen_features;
  std::vector<std::string> feature_names;  // columns of mean_coefficients
};

// Repeated k-fold CV along the lambda grid; held-out pinball (or MSE)
// averaged over repeats*folds, coefficients averaged over training fits.
SelectionResult select_features(const TabularDataset& imputed,
                                const std::string& target, QuantileLevel tau,
                                L1Loss loss, const std::vector<double>& grid,
                                int repeats, int folds, std::uint64_t seed,
                                const std::vector<std::string>& exclude = {});

// Threshold under which an averaged coefficient counts as zero.
inline constexpr double kNonzeroThreshold = 1e-8;

}  // namespace qrfx

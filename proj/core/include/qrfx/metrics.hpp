#pragma once

#include <optional>
#include <span>

namespace qrfx {

struct QuantileLevel {
  double tau;  // in (0, 1)
};

// Asymmetric check loss: tau*u for u > 0, -(1-tau)*u otherwise.
double pinball_loss(double u, QuantileLevel tau);

// Mean pinball loss over residuals u_i = y_i - yhat_i. Vector must be
// non-empty; mean (not sum) so values are comparable across fold sizes.
double pinball(std::span<const double> residuals, QuantileLevel tau);

struct RegressionMetrics {
  double mse = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;  // nullopt when y is constant
};

RegressionMetrics regression_metrics(std::span<const double> y,
                                     std::span<const double> yhat);

}  // namespace qrfx

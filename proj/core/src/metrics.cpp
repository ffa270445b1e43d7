#include "qrfx/metrics.hpp"

#include <cmath>

#include "qrfx/error.hpp"

namespace qrfx {

double pinball_loss(double u, QuantileLevel tau) {
  return u > 0.0 ? tau.tau * u : -(1.0 - tau.tau) * u;
}

double pinball(std::span<const double> residuals, QuantileLevel tau) {
  if (residuals.empty()) throw ValidationError("pinball: empty residual vector");
  if (!(tau.tau > 0.0 && tau.tau < 1.0))
    throw ValidationError("pinball: tau must be in (0,1)");
  double s = 0.0;
  for (double u : residuals) s += pinball_loss(u, tau);
  return s / static_cast<double>(residuals.size());
}

RegressionMetrics regression_metrics(std::span<const double> y,
                                     std::span<const double> yhat) {
  if (y.size() != yhat.size() || y.size() < 2)
    throw ValidationError("regression_metrics: need equal lengths >= 2");
  const double n = static_cast<double>(y.size());
  double sse = 0.0, ymean = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double r = y[i] - yhat[i];
    sse += r * r;
    ymean += y[i];
  }
  ymean /= n;
  double sst = 0.0;
  for (double v : y) sst += (v - ymean) * (v - ymean);

  RegressionMetrics m;
  m.mse = sse / n;
  m.rmse = std::sqrt(m.mse);
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;
  return m;
}

}  // namespace qrfx

#include "qrfx/l1_quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrfx/cv.hpp"
#include "qrfx/error.hpp"
#include "qrfx/parallel.hpp"
#include "qrfx/rng.hpp"

namespace qrfx {
namespace {

void check_inputs(const Matrix& x, std::span<const double> y, double lambda) {
  if (x.rows != y.size()) throw ValidationError("l1 fit: X/y size mismatch");
  if (x.rows == 0 || x.cols == 0) throw ValidationError("l1 fit: empty input");
  if (lambda < 0.0) throw ValidationError("l1 fit: lambda must be >= 0");
  for (double v : x.data)
    if (!std::isfinite(v)) throw ValidationError("l1 fit: non-finite feature");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("l1 fit: non-finite target");
}

struct Standardized {
  Matrix x;
  std::vector<double> mean, sd;
};

Standardized standardize(const Matrix& x) {
  Standardized s;
  s.x = Matrix(x.rows, x.cols);
  s.mean.assign(x.cols, 0.0);
  s.sd.assign(x.cols, 1.0);
  const double n = static_cast<double>(x.rows);
  for (std::size_t j = 0; j < x.cols; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) m += x(i, j);
    m /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) ss += (x(i, j) - m) * (x(i, j) - m);
    double sd = std::sqrt(ss / n);
    s.mean[j] = m;
    s.sd[j] = sd > 0.0 ? sd : 1.0;
    for (std::size_t i = 0; i < x.rows; ++i) s.x(i, j) = (x(i, j) - m) / s.sd[j];
  }
  return s;
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Derivative of the smoothed check loss: quadratic blend on |u| <= h.
double smoothed_pinball_grad(double u, double tau, double h) {
  if (u > h) return tau;
  if (u < -h) return tau - 1.0;
  return u / (2.0 * h) + tau - 0.5;
}

// tau-quantile with the "smallest value whose rank fraction reaches tau"
// convention; exact minimizer of the intercept-only pinball problem.
double sorted_quantile(std::vector<double> v, double tau) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  std::size_t k = static_cast<std::size_t>(
      std::ceil(tau * static_cast<double>(n) - 1e-12));
  if (k < 1) k = 1;
  if (k > n) k = n;
  return v[k - 1];
}

}  // namespace

double LinearQuantileModel::predict(std::span<const double> x_raw) const {
  double s = beta0;
  for (std::size_t j = 0; j < beta.size(); ++j)
    s += beta[j] * (x_raw[j] - feat_mean[j]) / feat_sd[j];
  return s;
}

double LinearQuantileModel::raw_coefficient(std::size_t j) const {
  return beta[j] / feat_sd[j];
}

double l1_pinball_objective(const LinearQuantileModel& m, const Matrix& x_raw,
                            std::span<const double> y, double lambda) {
  std::vector<double> residuals(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::span<const double> row(&x_raw.data[i * x_raw.cols], x_raw.cols);
    residuals[i] = y[i] - m.predict(row);
  }
  double l1 = 0.0;
  for (double b : m.beta) l1 += std::fabs(b);
  return pinball(residuals, m.tau) + lambda * l1;
}

LinearQuantileModel fit_l1_pinball(const Matrix& x_raw, std::span<const double> y,
                                   QuantileLevel tau, double lambda,
                                   std::uint64_t seed) {
  (void)seed;  // deterministic: the smoothed objective is convex
  check_inputs(x_raw, y, lambda);
  if (!(tau.tau > 0.0 && tau.tau < 1.0))
    throw ValidationError("fit_l1_pinball: tau must be in (0,1)");

  Standardized st = standardize(x_raw);
  const std::size_t n = x_raw.rows, p = x_raw.cols;
  const double dn = static_cast<double>(n);

  std::vector<double> col_sq(p, 0.0);  // (1/n) sum x_ij^2 per column
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) col_sq[j] += st.x(i, j) * st.x(i, j);
    col_sq[j] = std::max(col_sq[j] / dn, 1e-12);
  }

  std::vector<double> beta(p, 0.0);
  double beta0 = sorted_quantile(std::vector<double>(y.begin(), y.end()), tau.tau);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - beta0;

  // Two outer cycles: smoothing anneal + CD, then exact intercept, again.
  for (int cycle = 0; cycle < 2; ++cycle) {
    for (double h : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double lip0 = 1.0 / (2.0 * h);
      const double sweep_tol = std::max(1e-9, h * 1e-4);
      for (int sweep = 0; sweep < 400; ++sweep) {
        double max_change = 0.0;
        // Intercept: plain proximal step (no penalty).
        {
          double g = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            g -= smoothed_pinball_grad(resid[i], tau.tau, h);
          g /= dn;
          double step = -g / lip0;
          beta0 += step;
          for (std::size_t i = 0; i < n; ++i) resid[i] -= step;
          max_change = std::fabs(step);
        }
        for (std::size_t j = 0; j < p; ++j) {
          double g = 0.0;
          for (std::size_t i = 0; i < n; ++i)
            g -= st.x(i, j) * smoothed_pinball_grad(resid[i], tau.tau, h);
          g /= dn;
          const double lip = col_sq[j] / (2.0 * h);
          double next = soft_threshold(beta[j] - g / lip, lambda / lip);
          double step = next - beta[j];
          if (step != 0.0) {
            beta[j] = next;
            for (std::size_t i = 0; i < n; ++i) resid[i] -= step * st.x(i, j);
            max_change = std::max(max_change, std::fabs(step));
          }
        }
        if (max_change < sweep_tol) break;
      }
    }
    // Exact one-dimensional re-optimization of the intercept: the optimal
    // shift is the tau-quantile of the slope-model residuals.
    std::vector<double> r0(n);
    for (std::size_t i = 0; i < n; ++i) r0[i] = resid[i] + beta0;
    double new_beta0 = sorted_quantile(r0, tau.tau);
    double shift = new_beta0 - beta0;
    beta0 = new_beta0;
    for (std::size_t i = 0; i < n; ++i) resid[i] -= shift;
  }

  LinearQuantileModel m;
  m.beta0 = beta0;
  m.beta = std::move(beta);
  m.tau = tau;
  m.feat_mean = std::move(st.mean);
  m.feat_sd = std::move(st.sd);
  m.l1_norm = 0.0;
  for (double b : m.beta) m.l1_norm += std::fabs(b);
  return m;
}

LinearQuantileModel fit_l1_squared(const Matrix& x_raw, std::span<const double> y,
                                   double lambda, std::uint64_t seed) {
  (void)seed;
  check_inputs(x_raw, y, lambda);

  Standardized st = standardize(x_raw);
  const std::size_t n = x_raw.rows, p = x_raw.cols;
  const double dn = static_cast<double>(n);

  double ymean = 0.0;
  for (double v : y) ymean += v;
  ymean /= dn;

  std::vector<double> col_sq(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < n; ++i) col_sq[j] += st.x(i, j) * st.x(i, j);
    col_sq[j] = std::max(col_sq[j] / dn, 1e-12);
  }

  std::vector<double> beta(p, 0.0);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ymean;

  for (int sweep = 0; sweep < 10000; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += st.x(i, j) * resid[i];
      rho = rho / dn + col_sq[j] * beta[j];
      double next = soft_threshold(rho, lambda) / col_sq[j];
      double step = next - beta[j];
      if (step != 0.0) {
        beta[j] = next;
        for (std::size_t i = 0; i < n; ++i) resid[i] -= step * st.x(i, j);
        max_change = std::max(max_change, std::fabs(step));
      }
    }
    if (max_change <= 1e-8) break;
  }

  LinearQuantileModel m;
  m.beta0 = ymean;  // standardized columns are centered
  m.beta = std::move(beta);
  m.tau = QuantileLevel{0.5};
  m.feat_mean = std::move(st.mean);
  m.feat_sd = std::move(st.sd);
  m.l1_norm = 0.0;
  for (double b : m.beta) m.l1_norm += std::fabs(b);
  return m;
}

double lambda_max(const Matrix& x_raw, std::span<const double> y, bool pinball_loss,
                  QuantileLevel tau) {
  Standardized st = standardize(x_raw);
  const std::size_t n = x_raw.rows, p = x_raw.cols;
  const double dn = static_cast<double>(n);
  double best = 0.0;
  if (!pinball_loss) {
    double ymean = 0.0;
    for (double v : y) ymean += v;
    ymean /= dn;
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += st.x(i, j) * (y[i] - ymean);
      best = std::max(best, std::fabs(s) / dn);
    }
  } else {
    // Gradient magnitude at the intercept-only optimum; the exact pinball
    // subgradient there is bracketed by the smoothed one with small h.
    double q = sorted_quantile(std::vector<double>(y.begin(), y.end()), tau.tau);
    for (std::size_t j = 0; j < p; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += st.x(i, j) * smoothed_pinball_grad(y[i] - q, tau.tau, 1e-9);
      best = std::max(best, std::fabs(s) / dn);
    }
  }
  return best;
}

std::vector<double> default_lambda_grid(const Matrix& x, std::span<const double> y,
                                        bool pinball_loss, QuantileLevel tau,
                                        int count) {
  double lmax = lambda_max(x, y, pinball_loss, tau);
  if (lmax <= 0.0) lmax = 1.0;
  std::vector<double> grid;
  grid.reserve(count);
  const double lmin = 1e-3 * lmax;
  for (int i = 0; i < count; ++i) {
    double t = count == 1 ? 0.0
                          : static_cast<double>(i) / static_cast<double>(count - 1);
    grid.push_back(lmax * std::pow(lmin / lmax, t));
  }
  return grid;
}

SelectionResult select_features(const TabularDataset& imputed,
                                const std::string& target, QuantileLevel tau,
                                L1Loss loss, const std::vector<double>& grid,
                                int repeats, int folds, std::uint64_t seed,
                                const std::vector<std::string>& exclude) {
  if (grid.empty()) throw ValidationError("select_features: empty lambda grid");
  if (imputed.has_any_missing())
    throw ValidationError("select_features: dataset must be fully imputed");
  int tgt = imputed.column_index(target);
  if (tgt < 0) throw SchemaError("select_features: no such column: " + target);

  std::vector<std::size_t> feats;
  for (std::size_t j : imputed.feature_indices(exclude))
    if (static_cast<int>(j) != tgt) feats.push_back(j);
  const std::size_t n = imputed.n_rows(), p = feats.size();

  Matrix x(n, p);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = imputed.at(i, tgt);
    for (std::size_t c = 0; c < p; ++c) x(i, c) = imputed.at(i, feats[c]);
  }

  // One fold plan per repeat, shared across the whole path.
  std::vector<FoldPlan> plans;
  for (int r = 0; r < repeats; ++r)
    plans.push_back(make_folds(n, folds, derive_seed(seed, "select-repeat", r)));

  SelectionResult result;
  for (std::size_t c = 0; c < p; ++c)
    result.feature_names.push_back(imputed.schema[feats[c]].name);
  result.path.resize(grid.size());

  parallel_for(grid.size(), [&](std::size_t gi) {
    PathPoint point;
    point.lambda = grid[gi];
    point.mean_coefficients.assign(p, 0.0);
    double loss_sum = 0.0;
    int fits = 0;
    for (int r = 0; r < repeats; ++r) {
      for (int fold = 0; fold < folds; ++fold) {
        auto train = plans[r].train_indices(fold);
        auto test = plans[r].test_indices(fold);
        Matrix xt(train.size(), p);
        std::vector<double> yt(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
          yt[i] = y[train[i]];
          for (std::size_t c = 0; c < p; ++c) xt(i, c) = x(train[i], c);
        }
        std::uint64_t fit_seed = derive_seed(seed, "select-fit", r * folds + fold, gi);
        LinearQuantileModel m =
            loss == L1Loss::pinball
                ? fit_l1_pinball(xt, yt, tau, grid[gi], fit_seed)
                : fit_l1_squared(xt, yt, grid[gi], fit_seed);
        std::vector<double> residuals;
        residuals.reserve(test.size());
        for (std::size_t i : test) {
          std::span<const double> row(&x.data[i * p], p);
          residuals.push_back(y[i] - m.predict(row));
        }
        if (loss == L1Loss::pinball) {
          loss_sum += pinball(residuals, tau);
        } else {
          double sse = 0.0;
          for (double u : residuals) sse += u * u;
          loss_sum += sse / static_cast<double>(residuals.size());
        }
        for (std::size_t c = 0; c < p; ++c) point.mean_coefficients[c] += m.beta[c];
        ++fits;
      }
    }
    point.mean_cv_loss = loss_sum / static_cast<double>(fits);
    for (std::size_t c = 0; c < p; ++c) {
      point.mean_coefficients[c] /= static_cast<double>(fits);
      if (std::fabs(point.mean_coefficients[c]) > kNonzeroThreshold) {
        ++point.nonzero_count;
        point.s += std::fabs(point.mean_coefficients[c]);
      }
    }
    result.path[gi] = std::move(point);
  });

  result.chosen_index = 0;
  for (std::size_t gi = 1; gi < result.path.size(); ++gi)
    if (result.path[gi].mean_cv_loss < result.path[result.chosen_index].mean_cv_loss)
      result.chosen_index = gi;
  const PathPoint& chosen = result.path[result.chosen_index];
  for (std::size_t c = 0; c < p; ++c)
    if (std::fabs(chosen.mean_coefficients[c]) > kNonzeroThreshold)
      result.chosen_features.push_back(result.feature_names[c]);
  return result;
}

}  // namespace qrfx

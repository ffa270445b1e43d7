#include "qrfx/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "qrfx/error.hpp"
#include "qrfx/parallel.hpp"
#include "qrfx/rng.hpp"

namespace qrfx {
namespace {

std::vector<double> shapley_subset_weights(std::size_t p) {
  // w[k] = k!(p-1-k)!/p! computed as 1/(p * C(p-1, k)).
  std::vector<double> w(p);
  long double binom = 1.0L;
  for (std::size_t k = 0; k < p; ++k) {
    if (k > 0) binom = binom * static_cast<long double>(p - k) / static_cast<long double>(k);
    w[k] = static_cast<double>(1.0L / (static_cast<long double>(p) * binom));
  }
  return w;
}

}  // namespace

ExplainModel quantile_model(const QuantileForest& forest, QuantileLevel tau,
                            QuantileInterp interp) {
  return ExplainModel{forest.n_features(),
                      [&forest, tau, interp](std::span<const double> x) {
                        return forest.predict_quantile(x, tau, interp);
                      }};
}

ExplainModel mean_model(const QuantileForest& forest) {
  return ExplainModel{forest.n_features(), [&forest](std::span<const double> x) {
                        return forest.predict_mean(x);
                      }};
}

ShapValues shap_exact(const ExplainModel& model, std::span<const double> x,
                      const Matrix& background) {
  const std::size_t p = model.p;
  if (p > kShapExactMaxFeatures)
    throw ValidationError("shap_exact: p > 20, use shap_sampled");
  if (background.rows == 0) throw ValidationError("shap_exact: empty background");
  if (x.size() != p || background.cols != p)
    throw ValidationError("shap_exact: feature width mismatch");

  const std::size_t nmask = std::size_t{1} << p;
  std::vector<double> v(nmask, 0.0);

  // Gray-code walk per background row: consecutive masks differ by one
  // bit, so each coalition evaluation costs one substitution + predict.
  std::vector<double> row(p);
  for (std::size_t b = 0; b < background.rows; ++b) {
    for (std::size_t j = 0; j < p; ++j) row[j] = background(b, j);
    std::size_t prev_gray = 0;
    v[0] += model.f(row);
    for (std::size_t i = 1; i < nmask; ++i) {
      std::size_t gray = i ^ (i >> 1);
      std::size_t flipped = gray ^ prev_gray;
      std::size_t j = static_cast<std::size_t>(std::countr_zero(flipped));
      row[j] = (gray & flipped) ? x[j] : background(b, j);
      v[gray] += model.f(row);
      prev_gray = gray;
    }
  }
  const double inv_bg = 1.0 / static_cast<double>(background.rows);
  for (double& val : v) val *= inv_bg;

  std::vector<double> w = shapley_subset_weights(p);
  ShapValues out;
  out.base = v[0];
  out.phi.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < nmask; ++mask) {
      if (mask & bit) continue;
      phi += w[std::popcount(mask)] * (v[mask | bit] - v[mask]);
    }
    out.phi[j] = phi;
  }
  return out;
}

ShapValues shap_sampled(const ExplainModel& model, std::span<const double> x,
                        const Matrix& background, int permutations,
                        std::uint64_t seed) {
  const std::size_t p = model.p;
  if (permutations < 1) throw ValidationError("shap_sampled: permutations >= 1");
  if (background.rows == 0) throw ValidationError("shap_sampled: empty background");
  if (x.size() != p || background.cols != p)
    throw ValidationError("shap_sampled: feature width mismatch");

  std::vector<double> phi(p, 0.0);
  double base = 0.0;
  std::vector<double> row(p);
  std::vector<std::size_t> order(p);

  // Mean background prediction with the coalition applied on top.
  auto coalition_value = [&](const std::vector<std::size_t>& members,
                             std::size_t count) {
    double s = 0.0;
    for (std::size_t b = 0; b < background.rows; ++b) {
      for (std::size_t j = 0; j < p; ++j) row[j] = background(b, j);
      for (std::size_t k = 0; k < count; ++k) row[members[k]] = x[members[k]];
      s += model.f(row);
    }
    return s / static_cast<double>(background.rows);
  };

  int half = (permutations + 1) / 2;
  int used = 0;
  for (int t = 0; t < half; ++t) {
    Rng rng(derive_seed(seed, "shap-perm", static_cast<std::uint64_t>(t)));
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (int pass = 0; pass < 2 && used < permutations; ++pass, ++used) {
      if (pass == 1) std::reverse(order.begin(), order.end());  // antithetic
      double prev = coalition_value(order, 0);
      base += prev;
      for (std::size_t k = 0; k < p; ++k) {
        double cur = coalition_value(order, k + 1);
        phi[order[k]] += cur - prev;
        prev = cur;
      }
    }
  }
  ShapValues out;
  out.base = base / static_cast<double>(used);
  out.phi.resize(p);
  for (std::size_t j = 0; j < p; ++j)
    out.phi[j] = phi[j] / static_cast<double>(used);
  return out;
}

ShapReport shap_global(const ExplainModel& model, const Matrix& x,
                       const Matrix& background, int sampled_permutations,
                       std::uint64_t seed) {
  const std::size_t n = x.rows, p = model.p;
  ShapReport report;
  report.exact = p <= kShapExactMaxFeatures;
  report.phi = Matrix(n, p);

  std::vector<double> bases(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::span<const double> row(&x.data[i * p], p);
    ShapValues sv = report.exact
                        ? shap_exact(model, row, background)
                        : shap_sampled(model, row, background, sampled_permutations,
                                       derive_seed(seed, "shap-row", i));
    for (std::size_t j = 0; j < p; ++j) report.phi(i, j) = sv.phi[j];
    bases[i] = sv.base;
  });
  report.base_value = bases.empty() ? 0.0 : bases[0];

  report.mean_abs_phi.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      report.mean_abs_phi[j] += std::fabs(report.phi(i, j));
  for (double& v : report.mean_abs_phi) v /= static_cast<double>(n);

  report.ranking.resize(p);
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return report.mean_abs_phi[a] > report.mean_abs_phi[b];
                   });
  return report;
}

WaterfallRecord shap_individual(const ExplainModel& model, std::span<const double> x,
                                const Matrix& background) {
  ShapValues sv = shap_exact(model, x, background);
  WaterfallRecord rec;
  rec.base = sv.base;
  rec.prediction = model.f(x);
  for (std::size_t j = 0; j < model.p; ++j)
    rec.entries.push_back({j, sv.phi[j], x[j]});
  std::stable_sort(rec.entries.begin(), rec.entries.end(),
                   [](const WaterfallEntry& a, const WaterfallEntry& b) {
                     return std::fabs(a.phi) > std::fabs(b.phi);
                   });
  return rec;
}

IceGrid ice_1d(const ExplainModel& model, const Matrix& x, std::size_t feature,
               int grid_size) {
  if (feature >= model.p) throw ValidationError("ice_1d: feature index out of range");
  const std::size_t n = x.rows, p = model.p;

  double lo = x(0, feature), hi = x(0, feature);
  for (std::size_t i = 1; i < n; ++i) {
    lo = std::min(lo, x(i, feature));
    hi = std::max(hi, x(i, feature));
  }

  IceGrid out;
  out.feature = feature;
  if (hi <= lo) {
    out.constant_feature = true;
    out.grid = {lo};
  } else {
    out.grid.resize(grid_size);
    for (int g = 0; g < grid_size; ++g)
      out.grid[g] = lo + (hi - lo) * static_cast<double>(g) /
                             static_cast<double>(grid_size - 1);
  }

  const std::size_t gsize = out.grid.size();
  out.curves = Matrix(n, gsize);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> row(p);
    for (std::size_t j = 0; j < p; ++j) row[j] = x(i, j);
    for (std::size_t g = 0; g < gsize; ++g) {
      row[feature] = out.grid[g];
      out.curves(i, g) = model.f(row);
    }
  });

  out.pdp.assign(gsize, 0.0);
  for (std::size_t g = 0; g < gsize; ++g) {
    for (std::size_t i = 0; i < n; ++i) out.pdp[g] += out.curves(i, g);
    out.pdp[g] /= static_cast<double>(n);
  }

  out.sample_x.resize(n);
  out.sample_pred.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> row(&x.data[i * p], p);
    out.sample_x[i] = x(i, feature);
    out.sample_pred[i] = model.f(row);
  }
  return out;
}

PdpSurface pdp_2d(const ExplainModel& model, const Matrix& x, std::size_t feature_a,
                  std::size_t feature_b, int grid_a, int grid_b) {
  if (feature_a == feature_b) throw ValidationError("pdp_2d: features must differ");
  if (feature_a >= model.p || feature_b >= model.p)
    throw ValidationError("pdp_2d: feature index out of range");
  const std::size_t n = x.rows, p = model.p;

  auto axis = [&](std::size_t f, int count) {
    double lo = x(0, f), hi = x(0, f);
    for (std::size_t i = 1; i < n; ++i) {
      lo = std::min(lo, x(i, f));
      hi = std::max(hi, x(i, f));
    }
    std::vector<double> grid;
    if (hi <= lo) {
      grid = {lo};
    } else {
      grid.resize(count);
      for (int g = 0; g < count; ++g)
        grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(count - 1);
    }
    return grid;
  };

  PdpSurface out;
  out.feature_a = feature_a;
  out.feature_b = feature_b;
  out.grid_a = axis(feature_a, grid_a);
  out.grid_b = axis(feature_b, grid_b);
  out.surface = Matrix(out.grid_a.size(), out.grid_b.size());

  parallel_for(out.grid_a.size(), [&](std::size_t ga) {
    std::vector<double> row(p);
    for (std::size_t gb = 0; gb < out.grid_b.size(); ++gb) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) row[j] = x(i, j);
        row[feature_a] = out.grid_a[ga];
        row[feature_b] = out.grid_b[gb];
        s += model.f(row);
      }
      out.surface(ga, gb) = s / static_cast<double>(n);
    }
  });

  out.sample_a.resize(n);
  out.sample_b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.sample_a[i] = x(i, feature_a);
    out.sample_b[i] = x(i, feature_b);
  }
  return out;
}

}  // namespace qrfx

#include "qrfx/impute.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrfx/cv.hpp"
#include "qrfx/error.hpp"
#include "qrfx/parallel.hpp"

namespace qrfx {
namespace {

std::vector<double> observed_column_means(const TabularDataset& d) {
  const std::size_t n = d.n_rows(), p = d.n_cols();
  std::vector<double> means(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d.is_missing(i, j)) continue;
      sum += d.at(i, j);
      ++m;
    }
    if (m == 0)
      throw ValidationError("imputation: column fully missing: " + d.schema[j].name);
    means[j] = sum / static_cast<double>(m);
  }
  return means;
}

std::vector<double> observed_column_sds(const TabularDataset& d,
                                        const std::vector<double>& means) {
  const std::size_t n = d.n_rows(), p = d.n_cols();
  std::vector<double> sds(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double ss = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d.is_missing(i, j)) continue;
      double dv = d.at(i, j) - means[j];
      ss += dv * dv;
      ++m;
    }
    sds[j] = m >= 2 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
  }
  return sds;
}

// Bayesian linear ridge with precisions tuned by evidence maximization.
// Inputs/target are centered internally; the eigendecomposition of X^T X
// makes the fixed-point iterations O(m) each.
struct BayesRidge {
  double intercept = 0.0;
  std::vector<double> weights;

  static BayesRidge fit(const Matrix& x, const std::vector<double>& y,
                        int max_iter = 300, double tol = 1e-3) {
    const std::size_t n = x.rows, m = x.cols;
    BayesRidge model;
    double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (m == 0) {
      model.intercept = ymean;
      return model;
    }

    std::vector<double> xmean(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) xmean[j] += x(i, j);
      xmean[j] /= static_cast<double>(n);
    }
    Matrix xc(n, m);
    std::vector<double> yc(n);
    for (std::size_t i = 0; i < n; ++i) {
      yc[i] = y[i] - ymean;
      for (std::size_t j = 0; j < m; ++j) xc(i, j) = x(i, j) - xmean[j];
    }

    Matrix xtx(m, m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xc(i, a) * xc(i, b);
        xtx(a, b) = xtx(b, a) = s;
      }
    std::vector<double> xty(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < n; ++i) xty[j] += xc(i, j) * yc[i];

    EigenSym es = eigen_sym(xtx);
    // Rotate X^T y into the eigenbasis.
    std::vector<double> b(m, 0.0);
    for (std::size_t c = 0; c < m; ++c)
      for (std::size_t j = 0; j < m; ++j) b[c] += es.vectors(j, c) * xty[j];

    double yvar = 0.0;
    for (double v : yc) yvar += v * v;
    yvar /= static_cast<double>(n);
    double alpha = 1.0;
    double beta = yvar > 0.0 ? 1.0 / yvar : 1.0;

    std::vector<double> wz(m, 0.0);  // weights in the eigenbasis
    for (int it = 0; it < max_iter; ++it) {
      double gamma = 0.0, w2 = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        double lam = std::max(es.values[c], 0.0);
        wz[c] = beta * b[c] / (beta * lam + alpha);
        gamma += beta * lam / (beta * lam + alpha);
        w2 += wz[c] * wz[c];
      }
      // rss = |yc|^2 - 2 w.b + w^T diag(lam) w in the eigenbasis
      double rss = yvar * static_cast<double>(n);
      for (std::size_t c = 0; c < m; ++c) {
        double lam = std::max(es.values[c], 0.0);
        rss += wz[c] * wz[c] * lam - 2.0 * wz[c] * b[c];
      }
      rss = std::max(rss, 1e-12);
      double alpha_new = std::clamp(gamma / std::max(w2, 1e-12), 1e-10, 1e10);
      double beta_new =
          std::clamp(std::max(static_cast<double>(n) - gamma, 1e-12) / rss, 1e-10, 1e10);
      bool done = std::fabs(alpha_new - alpha) <= tol * std::fabs(alpha) &&
                  std::fabs(beta_new - beta) <= tol * std::fabs(beta);
      alpha = alpha_new;
      beta = beta_new;
      if (done) break;
    }

    model.weights.assign(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      double lam = std::max(es.values[c], 0.0);
      double wc = beta * b[c] / (beta * lam + alpha);
      for (std::size_t j = 0; j < m; ++j) model.weights[j] += es.vectors(j, c) * wc;
    }
    model.intercept = ymean;
    for (std::size_t j = 0; j < m; ++j) model.intercept -= model.weights[j] * xmean[j];
    return model;
  }

  double predict(std::span<const double> x) const {
    double s = intercept;
    for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
    return s;
  }
};

ForestHyper imputer_forest_hyper(std::size_t n_inputs, int trees) {
  ForestHyper h;
  h.n_estimators = trees;
  h.max_depth = 25;  // effectively unlimited at this n
  h.max_features = std::max<int>(1, static_cast<int>((n_inputs + 2) / 3));
  return h;
}

// Gathers the values of every column but `skip` for row i.
void gather_other_columns(const std::vector<double>& filled, std::size_t p,
                          std::size_t i, std::size_t skip, std::vector<double>& out) {
  out.clear();
  for (std::size_t j = 0; j < p; ++j)
    if (j != skip) out.push_back(filled[i * p + j]);
}

FittedImputer::ColumnModel fit_column_model(const TabularDataset& d,
                                            const std::vector<double>& filled,
                                            std::size_t j, IterativeRegressor reg,
                                            std::uint64_t seed, int forest_trees,
                                            std::vector<ImputeWarning>* warnings) {
  const std::size_t n = d.n_rows(), p = d.n_cols();
  FittedImputer::ColumnModel model;
  std::vector<std::size_t> obs;
  for (std::size_t i = 0; i < n; ++i)
    if (!d.is_missing(i, j)) obs.push_back(i);
  if (obs.size() < 2) {
    if (warnings)
      warnings->push_back({d.schema[j].name,
                           "fewer than 2 observing rows; column held at mean fill"});
    return model;
  }

  Matrix x(obs.size(), p - 1);
  std::vector<double> y(obs.size());
  std::vector<double> row;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    gather_other_columns(filled, p, obs[k], j, row);
    for (std::size_t c = 0; c < p - 1; ++c) x(k, c) = row[c];
    y[k] = d.at(obs[k], j);
  }

  model.valid = true;
  if (reg == IterativeRegressor::bayes_ridge) {
    BayesRidge br = BayesRidge::fit(x, y);
    model.intercept = br.intercept;
    model.weights = std::move(br.weights);
  } else {
    model.is_forest = true;
    model.forest = std::make_shared<QuantileForest>(
        fit_forest(x, y, imputer_forest_hyper(p - 1, forest_trees), seed));
  }
  return model;
}

double predict_column(const FittedImputer::ColumnModel& model,
                      std::span<const double> inputs) {
  if (model.is_forest) return model.forest->predict_mean(inputs);
  double s = model.intercept;
  for (std::size_t j = 0; j < model.weights.size(); ++j)
    s += model.weights[j] * inputs[j];
  return s;
}

}  // namespace

const char* impute_method_name(ImputeMethod m) {
  switch (m) {
    case ImputeMethod::mean: return "mean";
    case ImputeMethod::knn: return "knn";
    case ImputeMethod::bayes_iterative: return "bayes";
    case ImputeMethod::forest_iterative: return "rf";
  }
  return "mean";
}

ImputeMethod impute_method_from_string(const std::string& s) {
  if (s == "mean") return ImputeMethod::mean;
  if (s == "knn") return ImputeMethod::knn;
  if (s == "bayes" || s == "bayes_iterative") return ImputeMethod::bayes_iterative;
  if (s == "rf" || s == "forest" || s == "forest_iterative")
    return ImputeMethod::forest_iterative;
  throw ValidationError("unknown imputation method: " + s);
}

std::pair<FittedImputer, TabularDataset> fit_transform_mean(const TabularDataset& d) {
  FittedImputer imp;
  imp.method = ImputeMethod::mean;
  imp.schema = d.schema;
  imp.col_means = observed_column_means(d);
  return {imp, imp.transform(d)};
}

std::pair<FittedImputer, TabularDataset> fit_transform_knn(const TabularDataset& d,
                                                           int k) {
  if (k < 1) throw ValidationError("knn imputation: k must be >= 1");
  FittedImputer imp;
  imp.method = ImputeMethod::knn;
  imp.schema = d.schema;
  imp.knn_k = k;
  imp.col_means = observed_column_means(d);
  std::vector<double> sds = observed_column_sds(d, imp.col_means);
  imp.z_mean = imp.col_means;
  imp.z_sd.resize(sds.size());
  for (std::size_t j = 0; j < sds.size(); ++j)
    imp.z_sd[j] = sds[j] > 0.0 ? sds[j] : 1.0;
  imp.train_values = d.values;
  imp.train_missing = d.missing;
  imp.train_rows = d.n_rows();
  return {imp, imp.transform(d)};
}

std::pair<FittedImputer, TabularDataset> fit_transform_iterative(
    const TabularDataset& d, IterativeRegressor regressor, int rounds, double tol,
    std::uint64_t seed, int forest_trees) {
  if (rounds < 1) throw ValidationError("iterative imputation: rounds must be >= 1");
  FittedImputer imp;
  imp.method = regressor == IterativeRegressor::bayes_ridge
                   ? ImputeMethod::bayes_iterative
                   : ImputeMethod::forest_iterative;
  imp.schema = d.schema;
  imp.rounds = rounds;
  imp.tol = tol;
  imp.col_means = observed_column_means(d);
  std::vector<double> sds = observed_column_sds(d, imp.col_means);

  const std::size_t n = d.n_rows(), p = d.n_cols();
  std::vector<double> filled = d.values;
  std::vector<std::size_t> miss_count(p, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (d.is_missing(i, j)) {
        filled[i * p + j] = imp.col_means[j];
        ++miss_count[j];
      }

  imp.col_order.resize(p);
  std::iota(imp.col_order.begin(), imp.col_order.end(), std::size_t{0});
  std::stable_sort(imp.col_order.begin(), imp.col_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return miss_count[a] < miss_count[b];
                   });

  std::vector<double> inputs;
  for (int round = 0; round < rounds; ++round) {
    bool converged = true;
    double sweep_max = 0.0;
    for (std::size_t j : imp.col_order) {
      if (miss_count[j] == 0) continue;
      auto model = fit_column_model(d, filled, j, regressor,
                                    derive_seed(seed, "impute-col", j, round),
                                    forest_trees, round == 0 ? &imp.warnings : nullptr);
      if (!model.valid) continue;
      double col_max = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!d.is_missing(i, j)) continue;
        gather_other_columns(filled, p, i, j, inputs);
        double pred = predict_column(model, inputs);
        col_max = std::max(col_max, std::fabs(pred - filled[i * p + j]));
        filled[i * p + j] = pred;
      }
      sweep_max = std::max(sweep_max, col_max);
      if (col_max > tol * (sds[j] > 0.0 ? sds[j] : 1.0)) converged = false;
    }
    imp.sweep_changes.push_back(sweep_max);
    if (converged) break;
  }

  // Freeze one regressor per column (all columns: new data may miss
  // columns the training data observed everywhere).
  imp.col_models.resize(p);
  parallel_for(p, [&](std::size_t j) {
    imp.col_models[j] = fit_column_model(
        d, filled, j, regressor, derive_seed(seed, "impute-final", j), forest_trees,
        nullptr);
  });

  TabularDataset out;
  out.schema = d.schema;
  out.group = d.group;
  out.group_name = d.group_name;
  out.values = std::move(filled);
  out.missing.assign(n * p, 0);
  return {std::move(imp), std::move(out)};
}

std::pair<FittedImputer, TabularDataset> fit_transform(const TabularDataset& d,
                                                       ImputeMethod method,
                                                       const ImputeOptions& opt) {
  switch (method) {
    case ImputeMethod::mean: return fit_transform_mean(d);
    case ImputeMethod::knn: return fit_transform_knn(d, opt.knn_k);
    case ImputeMethod::bayes_iterative:
      return fit_transform_iterative(d, IterativeRegressor::bayes_ridge, opt.rounds,
                                     opt.tol, opt.seed, opt.imputer_forest_trees);
    case ImputeMethod::forest_iterative:
      return fit_transform_iterative(d, IterativeRegressor::forest, opt.rounds,
                                     opt.tol, opt.seed, opt.imputer_forest_trees);
  }
  throw ValidationError("unknown imputation method");
}

TabularDataset FittedImputer::transform(const TabularDataset& d) const {
  if (d.schema.size() != schema.size())
    throw SchemaError("imputer/transform schema width mismatch");
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (d.schema[j].name != schema[j].name)
      throw SchemaError("imputer/transform column mismatch at " + d.schema[j].name);

  const std::size_t n = d.n_rows(), p = d.n_cols();
  TabularDataset out;
  out.schema = d.schema;
  out.group = d.group;
  out.group_name = d.group_name;
  out.values = d.values;
  out.missing.assign(n * p, 0);

  if (method == ImputeMethod::mean) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j)
        if (d.is_missing(i, j)) out.at(i, j) = col_means[j];
    return out;
  }

  if (method == ImputeMethod::knn) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < p; ++j) {
        if (!d.is_missing(i, j)) continue;
        // Candidates: training rows observing column j, ranked by masked
        // z-scored distance over co-observed coordinates, scaled by p.
        std::vector<std::pair<double, std::size_t>> cands;
        for (std::size_t t = 0; t < train_rows; ++t) {
          if (train_missing[t * p + j]) continue;
          double s = 0.0;
          std::size_t co = 0;
          for (std::size_t c = 0; c < p; ++c) {
            if (d.is_missing(i, c) || train_missing[t * p + c]) continue;
            double zi = (d.at(i, c) - z_mean[c]) / z_sd[c];
            double zt = (train_values[t * p + c] - z_mean[c]) / z_sd[c];
            s += (zi - zt) * (zi - zt);
            ++co;
          }
          if (co == 0) continue;
          cands.emplace_back(s / static_cast<double>(co) * static_cast<double>(p), t);
        }
        if (cands.empty()) {
          out.at(i, j) = col_means[j];
          continue;
        }
        std::sort(cands.begin(), cands.end());
        const std::size_t take = std::min<std::size_t>(knn_k, cands.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < take; ++k)
          sum += train_values[cands[k].second * p + j];
        out.at(i, j) = sum / static_cast<double>(take);
      }
    }
    return out;
  }

  // Iterative: mean-initialize, then replay sweeps with the frozen
  // per-column regressors until tol or rounds.
  std::vector<double>& filled = out.values;
  std::vector<std::size_t> miss_count(p, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j)
      if (d.is_missing(i, j)) {
        filled[i * p + j] = col_means[j];
        ++miss_count[j];
      }

  std::vector<double> inputs;
  for (int round = 0; round < rounds; ++round) {
    double sweep_max = 0.0;
    for (std::size_t j : col_order) {
      if (miss_count[j] == 0 || !col_models[j].valid) continue;
      for (std::size_t i = 0; i < n; ++i) {
        if (!d.is_missing(i, j)) continue;
        gather_other_columns(filled, p, i, j, inputs);
        double pred = predict_column(col_models[j], inputs);
        sweep_max = std::max(sweep_max, std::fabs(pred - filled[i * p + j]));
        filled[i * p + j] = pred;
      }
    }
    if (sweep_max <= tol) break;
  }
  return out;
}

HyperGrid impute_eval_grid(std::size_t p) {
  HyperGrid g;
  g.n_estimators = {100};
  g.max_depth = {3, 5, 25};
  int third = std::max<int>(1, static_cast<int>((p + 2) / 3));
  int root = std::max<int>(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(p)))));
  for (int mf : {third, root, static_cast<int>(p)}) {
    if (std::find(g.max_features.begin(), g.max_features.end(), mf) ==
        g.max_features.end())
      g.max_features.push_back(mf);
  }
  std::sort(g.max_features.begin(), g.max_features.end());
  return g;
}

ImputationEvalReport evaluate_imputers(const TabularDataset& d,
                                       const std::string& target, int outer_k,
                                       int inner_k, std::uint64_t seed,
                                       const std::vector<std::string>& exclude,
                                       const ImputeOptions& opt) {
  int tgt = d.column_index(target);
  if (tgt < 0) throw SchemaError("evaluate_imputers: no such column: " + target);
  if (d.n_rows() < static_cast<std::size_t>(outer_k))
    throw ValidationError("evaluate_imputers: n < outer_k");

  std::vector<std::size_t> feats;
  for (std::size_t j : d.feature_indices(exclude))
    if (static_cast<int>(j) != tgt) feats.push_back(j);

  const ImputeMethod methods[] = {ImputeMethod::mean, ImputeMethod::knn,
                                  ImputeMethod::bayes_iterative,
                                  ImputeMethod::forest_iterative};

  FoldPlan plan = make_folds(d.n_rows(), outer_k, derive_seed(seed, "impute-outer"));
  std::vector<MethodMetrics> results(4);

  parallel_for(4, [&](std::size_t mi) {
    ImputeMethod method = methods[mi];
    MethodMetrics acc;
    int folds_scored = 0;
    for (int fold = 0; fold < outer_k; ++fold) {
      auto train_rows_ix = plan.train_indices(fold);
      auto test_rows_ix = plan.test_indices(fold);
      TabularDataset dtrain = subset_rows(d, train_rows_ix);
      TabularDataset dtest = subset_rows(d, test_rows_ix);

      ImputeOptions fold_opt = opt;
      fold_opt.seed = derive_seed(seed, "impute-fit", mi, fold);
      auto [imp, dtrain_imp] = fit_transform(dtrain, method, fold_opt);
      TabularDataset dtest_imp = imp.transform(dtest);

      // Supervised fit/score only on rows whose target was observed.
      auto build = [&](const TabularDataset& orig, const TabularDataset& imputed,
                       Matrix& x, std::vector<double>& y) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < orig.n_rows(); ++i)
          if (!orig.is_missing(i, tgt)) rows.push_back(i);
        x = Matrix(rows.size(), feats.size());
        y.resize(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          y[k] = orig.at(rows[k], tgt);
          for (std::size_t c = 0; c < feats.size(); ++c)
            x(k, c) = imputed.at(rows[k], feats[c]);
        }
      };
      Matrix xtr, xte;
      std::vector<double> ytr, yte;
      build(dtrain, dtrain_imp, xtr, ytr);
      build(dtest, dtest_imp, xte, yte);
      if (yte.size() < 2) continue;

      TuneResult tuned = tune_mean_forest(xtr, ytr, impute_eval_grid(feats.size()),
                                          inner_k, derive_seed(seed, "impute-inner", mi, fold));
      QuantileForest model = fit_forest(xtr, ytr, tuned.best,
                                        derive_seed(seed, "impute-refit", mi, fold));
      std::vector<double> pred(yte.size());
      for (std::size_t i = 0; i < yte.size(); ++i) {
        std::span<const double> row(&xte.data[i * xte.cols], xte.cols);
        pred[i] = model.predict_mean(row);
      }
      RegressionMetrics m = regression_metrics(yte, pred);
      acc.mse += m.mse;
      acc.rmse += m.rmse;
      acc.r2 += m.r2.value_or(0.0);
      ++folds_scored;
    }
    if (folds_scored > 0) {
      acc.mse /= folds_scored;
      acc.rmse /= folds_scored;
      acc.r2 /= folds_scored;
    }
    results[mi] = acc;
  });

  ImputationEvalReport report;
  for (std::size_t mi = 0; mi < 4; ++mi)
    report.methods.emplace_back(methods[mi], results[mi]);
  auto best_by = [&](auto key, bool maximize) {
    std::size_t best = 0;
    for (std::size_t mi = 1; mi < 4; ++mi) {
      double a = key(results[mi]), b = key(results[best]);
      if (maximize ? a > b : a < b) best = mi;
    }
    return methods[best];
  };
  report.best_mse = best_by([](const MethodMetrics& m) { return m.mse; }, false);
  report.best_rmse = best_by([](const MethodMetrics& m) { return m.rmse; }, false);
  report.best_r2 = best_by([](const MethodMetrics& m) { return m.r2; }, true);
  return report;
}

}  // namespace qrfx

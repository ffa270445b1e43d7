#include "qrfx/compare.hpp"

#include <algorithm>
#include <set>

#include "qrfx/cv.hpp"
#include "qrfx/error.hpp"
#include "qrfx/forest.hpp"
#include "qrfx/rng.hpp"

namespace qrfx {
namespace {

struct Xy {
  Matrix x;
  std::vector<double> y;
};

Xy build_xy(const TabularDataset& d, std::size_t target,
            const std::vector<std::size_t>& cols,
            const std::vector<std::size_t>& rows) {
  Xy out;
  out.x = Matrix(rows.size(), cols.size());
  out.y.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.y[i] = d.at(rows[i], target);
    for (std::size_t c = 0; c < cols.size(); ++c)
      out.x(i, c) = d.at(rows[i], cols[c]);
  }
  return out;
}

std::vector<std::size_t> name_indices(const TabularDataset& d,
                                      const std::vector<std::string>& names) {
  std::vector<std::size_t> idx;
  for (const auto& name : names) {
    int j = d.column_index(name);
    if (j < 0) throw SchemaError("compare: no such column: " + name);
    idx.push_back(static_cast<std::size_t>(j));
  }
  return idx;
}

std::vector<std::string> lasso_feature_set(const TabularDataset& d,
                                           const std::string& target,
                                           std::uint64_t seed,
                                           const std::vector<std::string>& exclude) {
  int tgt = d.column_index(target);
  std::vector<std::size_t> feats;
  for (std::size_t j : d.feature_indices(exclude))
    if (static_cast<int>(j) != tgt) feats.push_back(j);
  std::vector<std::size_t> all_rows(d.n_rows());
  for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
  Xy xy = build_xy(d, static_cast<std::size_t>(tgt), feats, all_rows);

  auto grid = default_lambda_grid(xy.x, xy.y, /*pinball_loss=*/false,
                                  QuantileLevel{0.5});
  SelectionResult sel = select_features(d, target, QuantileLevel{0.5},
                                        L1Loss::squared, grid, 10, 3, seed, exclude);
  if (!sel.chosen_features.empty()) return sel.chosen_features;
  // Degenerate path (nothing survives the penalty): keep every feature.
  std::vector<std::string> all;
  for (std::size_t j : feats) all.push_back(d.schema[j].name);
  return all;
}

// Pooled out-of-fold predictions for one train->test combination.
struct Pool {
  std::vector<double> y, yhat;
};

}  // namespace

SplitComparison compare_combined_vs_split(const TabularDataset& imputed,
                                          const std::string& target,
                                          std::uint64_t seed, int outer_k,
                                          int inner_k,
                                          const std::vector<std::string>& exclude) {
  if (imputed.has_any_missing())
    throw ValidationError("compare: dataset must be fully imputed");
  if (imputed.group.empty())
    throw ValidationError("compare: group column required");
  std::set<std::string> label_set(imputed.group.begin(), imputed.group.end());
  if (label_set.size() != 2)
    throw ValidationError("compare: exactly two group labels required");

  SplitComparison report;
  {
    auto it = label_set.begin();
    report.group_labels[0] = *it++;
    report.group_labels[1] = *it;
  }

  TabularDataset combined = add_indicator(imputed, report.group_labels[0]);
  const std::size_t n = combined.n_rows();
  const std::size_t target_col = combined.target_index();

  report.combined_features =
      lasso_feature_set(combined, target, derive_seed(seed, "compare-select", 0),
                        exclude);
  std::vector<std::size_t> group_rows[2];
  for (std::size_t i = 0; i < n; ++i)
    group_rows[imputed.group[i] == report.group_labels[0] ? 0 : 1].push_back(i);
  for (int g = 0; g < 2; ++g) {
    TabularDataset sub = subset_rows(imputed, group_rows[g]);
    report.group_features[g] = lasso_feature_set(
        sub, target, derive_seed(seed, "compare-select", 1 + g), exclude);
  }

  std::vector<std::size_t> combined_cols =
      name_indices(combined, report.combined_features);
  std::vector<std::size_t> group_cols[2] = {
      name_indices(combined, report.group_features[0]),
      name_indices(combined, report.group_features[1])};

  FoldPlan plan =
      make_folds(n, outer_k, derive_seed(seed, "compare-outer"), &combined.group);

  // Pools: combined->combined, combined->g0, combined->g1, g0->g0, g1->g1.
  Pool pools[5];
  auto tune_fit = [&](const Xy& train, std::uint64_t tune_seed) {
    TuneResult t = tune_mean_forest(train.x, train.y,
                                    default_hyper_grid(train.x.cols), inner_k,
                                    tune_seed);
    return fit_forest(train.x, train.y, t.best,
                      derive_seed(tune_seed, "compare-fit"));
  };

  for (int fold = 0; fold < outer_k; ++fold) {
    auto train = plan.train_indices(fold);
    auto test = plan.test_indices(fold);

    Xy ctrain = build_xy(combined, target_col, combined_cols, train);
    QuantileForest cmodel =
        tune_fit(ctrain, derive_seed(seed, "compare-tune", fold, 0));
    Xy ctest = build_xy(combined, target_col, combined_cols, test);
    for (std::size_t i = 0; i < test.size(); ++i) {
      std::span<const double> row(&ctest.x.data[i * ctest.x.cols], ctest.x.cols);
      double pred = cmodel.predict_mean(row);
      pools[0].y.push_back(ctest.y[i]);
      pools[0].yhat.push_back(pred);
      int g = imputed.group[test[i]] == report.group_labels[0] ? 0 : 1;
      pools[1 + g].y.push_back(ctest.y[i]);
      pools[1 + g].yhat.push_back(pred);
    }

    for (int g = 0; g < 2; ++g) {
      std::vector<std::size_t> gtrain, gtest;
      for (std::size_t i : train)
        if (imputed.group[i] == report.group_labels[g]) gtrain.push_back(i);
      for (std::size_t i : test)
        if (imputed.group[i] == report.group_labels[g]) gtest.push_back(i);
      if (gtrain.size() < 2 || gtest.empty()) continue;

      Xy gtr = build_xy(combined, target_col, group_cols[g], gtrain);
      QuantileForest gmodel =
          tune_fit(gtr, derive_seed(seed, "compare-tune", fold, 1 + g));
      Xy gte = build_xy(combined, target_col, group_cols[g], gtest);
      for (std::size_t i = 0; i < gtest.size(); ++i) {
        std::span<const double> row(&gte.x.data[i * gte.x.cols], gte.x.cols);
        pools[3 + g].y.push_back(gte.y[i]);
        pools[3 + g].yhat.push_back(gmodel.predict_mean(row));
      }
    }
  }

  const std::string names[5][2] = {{"combined", "combined"},
                                   {"combined", report.group_labels[0]},
                                   {"combined", report.group_labels[1]},
                                   {report.group_labels[0], report.group_labels[0]},
                                   {report.group_labels[1], report.group_labels[1]}};
  for (int c = 0; c < 5; ++c) {
    SplitComparisonEntry entry;
    entry.train = names[c][0];
    entry.test = names[c][1];
    entry.n_test = pools[c].y.size();
    entry.metrics = regression_metrics(pools[c].y, pools[c].yhat);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace qrfx

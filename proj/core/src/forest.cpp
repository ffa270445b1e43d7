#include "qrfx/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "qrfx/cv.hpp"
#include "qrfx/error.hpp"
#include "qrfx/parallel.hpp"

namespace qrfx {
namespace {

constexpr int kModelVersion = 1;

struct SplitCandidate {
  double score = std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
};

struct Builder {
  const Matrix& x;
  const std::vector<double>& y;
  const ForestHyper& hyper;
  Rng& rng;
  Tree tree;

  int build(std::vector<int> rows, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    double sum = 0.0, sum2 = 0.0;
    for (int r : rows) {
      sum += y[r];
      sum2 += y[r] * y[r];
    }
    const double n = static_cast<double>(rows.size());
    const double sse = sum2 - sum * sum / n;

    bool stop = depth >= hyper.max_depth ||
                static_cast<int>(rows.size()) < hyper.min_samples_split ||
                sse <= 1e-12;

    SplitCandidate best;
    if (!stop) {
      best = find_split(rows);
      stop = best.feature < 0;
    }

    if (stop) {
      TreeNode& leaf = tree.nodes[node_id];
      leaf.leaf_mean = sum / n;
      leaf.rows = std::move(rows);
      leaf.targets.reserve(leaf.rows.size());
      for (int r : leaf.rows) leaf.targets.push_back(y[r]);
      return node_id;
    }

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (x(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    int left = build(std::move(left_rows), depth + 1);
    int right = build(std::move(right_rows), depth + 1);
    TreeNode& node = tree.nodes[node_id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return node_id;
  }

  SplitCandidate find_split(const std::vector<int>& rows) {
    const std::size_t p = x.cols;
    // Sample max_features distinct features, then scan them in index
    // order so score ties resolve to the lowest feature.
    std::vector<int> features(p);
    std::iota(features.begin(), features.end(), 0);
    const std::size_t take = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(1, hyper.max_features)), p);
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + rng.uniform_index(p - i);
      std::swap(features[i], features[j]);
    }
    features.resize(take);
    std::sort(features.begin(), features.end());

    SplitCandidate best;
    std::vector<std::pair<double, double>> vt;  // (value, target)
    vt.reserve(rows.size());
    for (int f : features) {
      vt.clear();
      for (int r : rows) vt.emplace_back(x(r, f), y[r]);
      std::sort(vt.begin(), vt.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double total = 0.0, total2 = 0.0;
      for (const auto& [v, t] : vt) {
        total += t;
        total2 += t * t;
      }
      const double nall = static_cast<double>(vt.size());

      double lsum = 0.0, lsum2 = 0.0;
      for (std::size_t i = 0; i + 1 < vt.size(); ++i) {
        lsum += vt[i].second;
        lsum2 += vt[i].second * vt[i].second;
        if (vt[i].first == vt[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = nall - nl;
        if (nl < hyper.min_samples_leaf || nr < hyper.min_samples_leaf) continue;
        const double rsum = total - lsum;
        const double rsum2 = total2 - lsum2;
        const double score = (lsum2 - lsum * lsum / nl) + (rsum2 - rsum * rsum / nr);
        // Midpoint can round up onto the right value when neighbours differ
        // by an ulp; fall back to the left value so both children stay
        // non-empty under the `x <= thr` partition.
        double thr = vt[i].first + 0.5 * (vt[i + 1].first - vt[i].first);
        if (thr >= vt[i + 1].first) thr = vt[i].first;
        if (score < best.score ||
            (score == best.score &&
             (f < best.feature || (f == best.feature && thr < best.threshold)))) {
          best.score = score;
          best.feature = f;
          best.threshold = thr;
        }
      }
    }
    return best;
  }
};

}  // namespace

HyperGrid default_hyper_grid(std::size_t p) {
  HyperGrid g;
  g.n_estimators = {100, 200, 500};
  g.max_depth = {2, 3, 4, 5, 7};
  for (int mf : {1, 2, 3, 6, 9, static_cast<int>(p)}) {
    if (mf >= 1 && mf <= static_cast<int>(p) &&
        std::find(g.max_features.begin(), g.max_features.end(), mf) ==
            g.max_features.end())
      g.max_features.push_back(mf);
  }
  return g;
}

Tree fit_tree(const Matrix& x, const std::vector<double>& y,
              const std::vector<int>& rows, const ForestHyper& hyper, Rng& rng) {
  if (rows.empty()) throw ValidationError("fit_tree: no rows");
  Builder b{x, y, hyper, rng, {}};
  b.build(rows, 0);
  return std::move(b.tree);
}

QuantileForest fit_forest(const Matrix& x, const std::vector<double>& y,
                          const ForestHyper& hyper, std::uint64_t seed,
                          std::vector<std::string> feature_names) {
  if (x.rows != y.size()) throw ValidationError("fit_forest: X/y size mismatch");
  if (x.rows < 2) throw ValidationError("fit_forest: need at least 2 rows");
  for (double v : y)
    if (!std::isfinite(v)) throw ValidationError("fit_forest: non-finite target");
  for (double v : x.data)
    if (!std::isfinite(v)) throw ValidationError("fit_forest: non-finite feature");

  QuantileForest f;
  f.hyper = hyper;
  f.seed = seed;
  f.y_train = y;
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols; ++j)
      feature_names.push_back("x" + std::to_string(j));
  }
  if (feature_names.size() != x.cols)
    throw ValidationError("fit_forest: feature name count mismatch");
  f.feature_names = std::move(feature_names);

  const std::size_t n = x.rows;
  f.trees.resize(hyper.n_estimators);
  parallel_for(static_cast<std::size_t>(hyper.n_estimators), [&](std::size_t t) {
    Rng rng(derive_seed(seed, "tree", t));
    std::vector<int> rows(n);
    for (std::size_t i = 0; i < n; ++i)
      rows[i] = static_cast<int>(rng.uniform_index(n));
    f.trees[t] = fit_tree(x, y, rows, hyper, rng);
  });
  f.finalize();
  return f;
}

void QuantileForest::finalize() {
  sorted_order_.resize(y_train.size());
  std::iota(sorted_order_.begin(), sorted_order_.end(), std::size_t{0});
  std::stable_sort(sorted_order_.begin(), sorted_order_.end(),
                   [&](std::size_t a, std::size_t b) { return y_train[a] < y_train[b]; });
}

int QuantileForest::leaf_index(const Tree& tree, std::span<const double> x) const {
  int idx = 0;
  while (!tree.nodes[idx].is_leaf()) {
    const TreeNode& n = tree.nodes[idx];
    idx = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return idx;
}

double QuantileForest::predict_mean(std::span<const double> x) const {
  if (x.size() != n_features())
    throw ValidationError("predict: row width mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw ValidationError("predict: non-finite input");
  double s = 0.0;
  for (const Tree& t : trees) s += t.nodes[leaf_index(t, x)].leaf_mean;
  return s / static_cast<double>(trees.size());
}

void QuantileForest::weights_at(std::span<const double> x, std::span<double> w) const {
  std::fill(w.begin(), w.end(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(trees.size());
  for (const Tree& t : trees) {
    const TreeNode& leaf = t.nodes[leaf_index(t, x)];
    const double wl = inv_b / static_cast<double>(leaf.rows.size());
    for (int r : leaf.rows) w[r] += wl;
  }
}

double QuantileForest::predict_quantile(std::span<const double> x, QuantileLevel tau,
                                        QuantileInterp interp) const {
  if (x.size() != n_features())
    throw ValidationError("predict: row width mismatch");
  if (!(tau.tau > 0.0 && tau.tau < 1.0))
    throw ValidationError("predict_quantile: tau must be in (0,1)");
  for (double v : x)
    if (!std::isfinite(v)) throw ValidationError("predict: non-finite input");

  thread_local std::vector<double> w;
  w.assign(y_train.size(), 0.0);
  weights_at(x, w);

  // Smallest stored target whose cumulative weight reaches tau. A tiny
  // epsilon absorbs float accumulation at exact-crossing ties.
  double cum = 0.0;
  double prev_y = y_train[sorted_order_.front()];
  for (std::size_t k = 0; k < sorted_order_.size(); ++k) {
    const std::size_t r = sorted_order_[k];
    if (w[r] == 0.0) continue;
    const double cum_before = cum;
    cum += w[r];
    if (cum + 1e-12 >= tau.tau) {
      if (interp == QuantileInterp::lower) return y_train[r];
      const double frac = (tau.tau - cum_before) / w[r];
      return prev_y + std::clamp(frac, 0.0, 1.0) * (y_train[r] - prev_y);
    }
    prev_y = y_train[r];
  }
  return y_train[sorted_order_.back()];
}

namespace {

double score_hyper(const Matrix& x, const std::vector<double>& y,
                   const ForestHyper& hyper, const FoldPlan& plan,
                   std::uint64_t seed, bool quantile, QuantileLevel tau) {
  double total = 0.0;
  for (int fold = 0; fold < plan.k; ++fold) {
    auto train = plan.train_indices(fold);
    auto test = plan.test_indices(fold);
    Matrix xt(train.size(), x.cols);
    std::vector<double> yt(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      yt[i] = y[train[i]];
      for (std::size_t j = 0; j < x.cols; ++j) xt(i, j) = x(train[i], j);
    }
    QuantileForest f =
        fit_forest(xt, yt, hyper, derive_seed(seed, "cv-fit", fold));
    std::vector<double> residuals;
    double sse = 0.0;
    for (std::size_t i : test) {
      std::span<const double> row(&x.data[i * x.cols], x.cols);
      if (quantile) {
        residuals.push_back(y[i] - f.predict_quantile(row, tau));
      } else {
        double r = y[i] - f.predict_mean(row);
        sse += r * r;
      }
    }
    total += quantile ? pinball(residuals, tau)
                      : sse / static_cast<double>(test.size());
  }
  return total / static_cast<double>(plan.k);
}

TuneResult tune_impl(const Matrix& x, const std::vector<double>& y,
                     QuantileLevel tau, const HyperGrid& grid, int folds,
                     std::uint64_t seed, bool quantile) {
  if (grid.n_estimators.empty() || grid.max_depth.empty() || grid.max_features.empty())
    throw ValidationError("tune: empty hyperparameter grid");

  struct Combo {
    ForestHyper h;
    double score = 0.0;
  };
  std::vector<Combo> combos;
  for (int ne : grid.n_estimators)
    for (int md : grid.max_depth)
      for (int mf : grid.max_features) {
        ForestHyper h;
        h.n_estimators = ne;
        h.max_depth = md;
        h.max_features = std::min<int>(mf, static_cast<int>(x.cols));
        combos.push_back({h, 0.0});
      }
  // Tie-break order: fewer trees, smaller depth, fewer features.
  std::stable_sort(combos.begin(), combos.end(), [](const Combo& a, const Combo& b) {
    return std::tuple(a.h.n_estimators, a.h.max_depth, a.h.max_features) <
           std::tuple(b.h.n_estimators, b.h.max_depth, b.h.max_features);
  });

  FoldPlan plan = make_folds(x.rows, folds, derive_seed(seed, "tune-folds"));
  parallel_for(combos.size(), [&](std::size_t c) {
    combos[c].score =
        score_hyper(x, y, combos[c].h, plan, derive_seed(seed, "tune", c), quantile, tau);
  });

  TuneResult best;
  best.mean_pinball = std::numeric_limits<double>::infinity();
  for (const Combo& c : combos) {
    if (c.score < best.mean_pinball) {
      best.mean_pinball = c.score;
      best.best = c.h;
    }
  }
  return best;
}

}  // namespace

TuneResult tune_forest(const Matrix& x, const std::vector<double>& y,
                       QuantileLevel tau, const HyperGrid& grid, int folds,
                       std::uint64_t seed) {
  return tune_impl(x, y, tau, grid, folds, seed, true);
}

TuneResult tune_mean_forest(const Matrix& x, const std::vector<double>& y,
                            const HyperGrid& grid, int folds, std::uint64_t seed) {
  return tune_impl(x, y, QuantileLevel{0.5}, grid, folds, seed, false);
}

void save_model(const QuantileForest& f, const std::string& path) {
  nlohmann::json j;
  j["version"] = kModelVersion;
  j["hyper"] = {{"n_estimators", f.hyper.n_estimators},
                {"max_depth", f.hyper.max_depth},
                {"max_features", f.hyper.max_features},
                {"min_samples_leaf", f.hyper.min_samples_leaf},
                {"min_samples_split", f.hyper.min_samples_split}};
  j["seed"] = f.seed;
  j["feature_names"] = f.feature_names;
  j["y_train"] = f.y_train;
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& t : f.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : t.nodes) {
      nlohmann::json node;
      node["feature"] = n.feature;
      if (n.is_leaf()) {
        node["rows"] = n.rows;
        node["targets"] = n.targets;
        node["mean"] = n.leaf_mean;
      } else {
        node["threshold"] = n.threshold;
        node["left"] = n.left;
        node["right"] = n.right;
      }
      nodes.push_back(std::move(node));
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path);
  out << j.dump() << '\n';
}

QuantileForest load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError(std::string("corrupt model file: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != kModelVersion)
    throw ParseError("model file version mismatch");

  QuantileForest f;
  try {
    const auto& h = j.at("hyper");
    f.hyper.n_estimators = h.at("n_estimators").get<int>();
    f.hyper.max_depth = h.at("max_depth").get<int>();
    f.hyper.max_features = h.at("max_features").get<int>();
    f.hyper.min_samples_leaf = h.at("min_samples_leaf").get<int>();
    f.hyper.min_samples_split = h.at("min_samples_split").get<int>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    f.y_train = j.at("y_train").get<std::vector<double>>();
    for (const auto& jt : j.at("trees")) {
      Tree t;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        if (n.feature < 0) {
          n.rows = jn.at("rows").get<std::vector<int>>();
          n.targets = jn.at("targets").get<std::vector<double>>();
          n.leaf_mean = jn.at("mean").get<double>();
        } else {
          n.threshold = jn.at("threshold").get<double>();
          n.left = jn.at("left").get<int>();
          n.right = jn.at("right").get<int>();
        }
        t.nodes.push_back(std::move(n));
      }
      f.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("corrupt model file: ") + e.what());
  }
  if (static_cast<int>(f.trees.size()) != f.hyper.n_estimators)
    throw ParseError("model file tree count does not match n_estimators");
  f.finalize();
  return f;
}

}  // namespace qrfx

#include <benchmark/benchmark.h>

#include <vector>

#include "qrfx/explain.hpp"
#include "qrfx/forest.hpp"
#include "qrfx/l1_quantile.hpp"
#include "qrfx/rng.hpp"

namespace {

using namespace qrfx;

// Synthetic regression problem: linear signal + noise.
struct Problem {
  Matrix x;
  std::vector<double> y;
};

Problem make_problem(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  Problem pr{Matrix(n, p), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      double v = rng.normal();
      pr.x(i, j) = v;
      if (j < 5) s += v * static_cast<double>(j + 1) * 0.2;
    }
    pr.y[i] = s + 0.3 * rng.normal();
  }
  return pr;
}

void bm_forest_fit(benchmark::State& state) {
  Problem pr = make_problem(64, 16, 11);
  ForestHyper hyper{100, 3, 6, 1, 2};
  for (auto _ : state) {
    QuantileForest f = fit_forest(pr.x, pr.y, hyper, 7);
    benchmark::DoNotOptimize(f.trees.size());
  }
}
BENCHMARK(bm_forest_fit);

void bm_forest_predict_quantile(benchmark::State& state) {
  Problem pr = make_problem(64, 16, 11);
  QuantileForest f = fit_forest(pr.x, pr.y, ForestHyper{100, 3, 6, 1, 2}, 7);
  std::span<const double> row(&pr.x.data[0], pr.x.cols);
  for (auto _ : state) {
    double q = f.predict_quantile(row, QuantileLevel{0.9});
    benchmark::DoNotOptimize(q);
  }
}
BENCHMARK(bm_forest_predict_quantile);

void bm_l1_pinball_fit(benchmark::State& state) {
  Problem pr = make_problem(48, 24, 13);
  for (auto _ : state) {
    LinearQuantileModel m = fit_l1_pinball(pr.x, pr.y, QuantileLevel{0.9}, 0.05, 7);
    benchmark::DoNotOptimize(m.l1_norm);
  }
}
BENCHMARK(bm_l1_pinball_fit);

void bm_shap_exact(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  Problem pr = make_problem(32, p, 17);
  QuantileForest f = fit_forest(pr.x, pr.y, ForestHyper{50, 3, 3, 1, 2}, 7);
  ExplainModel em = quantile_model(f, QuantileLevel{0.9});
  std::span<const double> row(&pr.x.data[0], pr.x.cols);
  for (auto _ : state) {
    ShapValues sv = shap_exact(em, row, pr.x);
    benchmark::DoNotOptimize(sv.base);
  }
}
BENCHMARK(bm_shap_exact)->Arg(8)->Arg(12);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <numeric>

#include "hotspot/ensemble.hpp"
#include "hotspot/evaluation.hpp"
#include "hotspot/learners.hpp"
#include "hotspot/random.hpp"
#include "hotspot/resampling.hpp"
#include "hotspot/synthgen.hpp"

using namespace hotspot;

namespace {

struct Data {
  Matrix X;
  std::vector<std::uint8_t> y;
};

/// Imbalanced rows: roughly 1 % positives driven by the first two columns.
Data make_data(std::size_t n, std::size_t d) {
  Rng rng(42);
  Data out{Matrix(n, d), std::vector<std::uint8_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out.X(i, j) = uniform01(rng);
    out.y[i] = uniform01(rng) < 0.02 * (out.X(i, 0) + out.X(i, 1)) ? 1 : 0;
  }
  out.y[0] = 1;
  return out;
}

void BM_TreeFit(benchmark::State& state) {
  const auto d = make_data(static_cast<std::size_t>(state.range(0)), 16);
  LearnerSpec s;
  s.trees = 1;
  s.max_depth = 8;
  for (auto _ : state) benchmark::DoNotOptimize(fit(s, d.X, d.y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TreeFit)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const auto d = make_data(20'000, 16);
  LearnerSpec s;
  s.trees = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit(s, d.X, d.y));
}
BENCHMARK(BM_ForestFit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_HyperEnsembleFit(benchmark::State& state) {
  const auto d = make_data(200'000, 16);
  LearnerSpec s;
  s.trees = 20;
  for (auto _ : state) benchmark::DoNotOptimize(train_hyper_ensemble(d.X, d.y, static_cast<int>(state.range(0)), s, 7));
}
BENCHMARK(BM_HyperEnsembleFit)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Smote(benchmark::State& state) {
  const auto d = make_data(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(smote(d.X, d.y, 3));
}
BENCHMARK(BM_Smote)->Arg(5'000)->Arg(20'000)->Unit(benchmark::kMillisecond);

void BM_RankAndCurve(benchmark::State& state) {
  const std::size_t cells = static_cast<std::size_t>(state.range(0));
  const int days = 365;
  Rng rng(5);
  std::vector<CellId> ids(cells);
  std::iota(ids.begin(), ids.end(), CellId{0});
  std::vector<std::vector<double>> scores(days, std::vector<double>(cells));
  std::vector<std::vector<CellId>> actuals(days);
  for (int t = 0; t < days; ++t) {
    for (auto& v : scores[static_cast<std::size_t>(t)]) v = uniform01(rng);
    for (int e = 0; e < 3; ++e) actuals[static_cast<std::size_t>(t)].push_back(static_cast<CellId>(uniform_index(rng, cells)));
  }
  for (auto& a : actuals) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  const auto grid = default_coverage_grid();
  for (auto _ : state) {
    std::vector<DailyRanking> rankings;
    rankings.reserve(days);
    for (int t = 0; t < days; ++t) rankings.push_back(rank_cells(ids, scores[static_cast<std::size_t>(t)], t));
    benchmark::DoNotOptimize(evaluate_rankings(rankings, actuals, default_report_coverages(), grid));
  }
}
BENCHMARK(BM_RankAndCurve)->Arg(2'000)->Arg(10'149)->Unit(benchmark::kMillisecond);

void BM_SynthGenerate(benchmark::State& state) {
  SynthConfig c;
  c.days = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate(c));
}
BENCHMARK(BM_SynthGenerate)->Arg(365)->Arg(730)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "bidscreen/models/artifact.hpp"
#include "bidscreen/reporting.hpp"
#include "bidscreen/screens.hpp"
#include "bidscreen/simulate.hpp"

using namespace bidscreen;

namespace {

const Dataset& benchmark_data() {
  static const Dataset data = generate(SimConfig{});
  return data;
}

void BM_ComputeScreens(benchmark::State& state) {
  const auto& tenders = benchmark_data().tenders;
  for (auto _ : state) {
    for (const auto& t : tenders) benchmark::DoNotOptimize(compute_screens(t));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tenders.size()));
}
BENCHMARK(BM_ComputeScreens)->Unit(benchmark::kMillisecond);

void BM_ExpandFeatures(benchmark::State& state) {
  std::vector<ScreenVector> screens;
  for (const auto& t : benchmark_data().tenders) screens.push_back(compute_screens(t));
  for (auto _ : state) {
    for (const auto& s : screens) benchmark::DoNotOptimize(expand_features(s));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(screens.size()));
}
BENCHMARK(BM_ExpandFeatures)->Unit(benchmark::kMillisecond);

void BM_TrainForest(benchmark::State& state) {
  const auto data = make_examples(benchmark_data(), FeatureMode::expanded);
  const nlohmann::json config = {{"n_trees", state.range(0)}, {"seed", 7}};
  for (auto _ : state) benchmark::DoNotOptimize(train(Family::random_forest, config, data));
}
BENCHMARK(BM_TrainForest)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_PredictForest(benchmark::State& state) {
  const auto data = make_examples(benchmark_data(), FeatureMode::expanded);
  const auto model = train(Family::random_forest, {{"n_trees", 1000}, {"seed", 7}}, data);
  for (auto _ : state) benchmark::DoNotOptimize(predict_proba(model, data.x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_PredictForest)->Unit(benchmark::kMillisecond);

void BM_Suspicioucy(benchmark::State& state) {
  const auto n_firms = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> firms;
  for (std::size_t f = 0; f < n_firms; ++f) firms.push_back(firm_name(f));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Verdict> verdicts;
  for (const auto& t : benchmark_data().tenders) verdicts.push_back(make_verdict(t.tender_id, u(rng), {}));
  for (auto _ : state) {
    benchmark::DoNotOptimize(suspicioucy_rates(firms, benchmark_data().tenders, verdicts, 0.5,
                                               ClusterMode::with_diagonal));
  }
  state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << n_firms));
}
BENCHMARK(BM_Suspicioucy)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();

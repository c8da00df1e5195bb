#include <benchmark/benchmark.h>

#include <map>
#include <string>
#include <vector>

#include "vms/memstats.hpp"
#include "vms/mempredict.hpp"
#include "vms/recon.hpp"
#include "vms/rng.hpp"

namespace {

vms::MapGrid random_map(vms::CounterRng& rng, vms::GridDims dims) {
  vms::MapGrid m(dims);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) m.at(x, y) = rng.uniform();
  }
  return m;
}

vms::FeatureTable random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  vms::CounterRng rng(seed);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& row : rows) {
    for (auto& v : row) v = rng.uniform();
  }
  return {{"f", std::move(rows)}};
}

void BM_KernelMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto table = random_features(n, 512, 1);
  const vms::KernelSpec spec{{{"f", vms::KernelKind::HistogramIntersection}}};
  for (auto _ : state) benchmark::DoNotOptimize(vms::kernel_matrix(table, spec));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KernelMatrix)->Arg(100)->Arg(400)->Complexity();

void BM_SvrTrain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  vms::CounterRng rng(2);
  std::vector<std::vector<double>> x(n, std::vector<double>(8));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x[i]) v = rng.uniform();
    y[i] = x[i][0] + 0.1 * rng.normal();
  }
  vms::Matrix K(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) K(i, j) = vms::kernel_value(vms::KernelKind::Rbf, 1.0, x[i], x[j]);
  }
  for (auto _ : state) benchmark::DoNotOptimize(vms::svr_train(K, y, {.C = 1.0, .epsilon = 0.05}));
}
BENCHMARK(BM_SvrTrain)->Arg(100)->Arg(400);

void BM_Pearson2d(benchmark::State& state) {
  vms::CounterRng rng(3);
  const auto a = random_map(rng, vms::kAnalysisGrid), b = random_map(rng, vms::kAnalysisGrid);
  for (auto _ : state) benchmark::DoNotOptimize(vms::pearson2d(a, b));
}
BENCHMARK(BM_Pearson2d);

void BM_MutualInformation(benchmark::State& state) {
  vms::CounterRng rng(4);
  const auto a = random_map(rng, vms::kAnalysisGrid), b = random_map(rng, vms::kAnalysisGrid);
  for (auto _ : state) benchmark::DoNotOptimize(vms::mutual_information(a, b, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_MutualInformation)->Arg(16)->Arg(32)->Arg(64);

void BM_HeadForward(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const vms::HeadShape shape{.input = 512 * 4, .hidden1 = 256, .hidden2 = 256};
  const auto params = vms::init_head<float>(shape, 5);
  vms::CounterRng rng(6);
  std::vector<float> x(batch * shape.input);
  for (auto& v : x) v = static_cast<float>(rng.uniform());
  for (auto _ : state) benchmark::DoNotOptimize(vms::head_forward<float>(params, x, batch, vms::ForwardMode::Train));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_HeadForward)->Arg(1)->Arg(40);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <vector>

#include "kahs/rng.hpp"
#include "kahs/sensing.hpp"
#include "kahs/transforms.hpp"

namespace {

// Power-law coefficients with a shuffled support, the shape the sensing
// loop sees on natural images.
std::vector<double> powerlaw_coeffs(std::size_t n, std::uint64_t seed) {
  kahs::Rng rng(seed);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = (rng.coin() ? 1.0 : -1.0) * std::pow(static_cast<double>(i + 1), -1.2);
  }
  for (std::size_t i = n - 1; i > 0; --i) std::swap(v[i], v[rng.next() % (i + 1)]);
  return v;
}

void BM_SenseRangeSum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto tree = std::make_shared<const kahs::CoefficientTree>(powerlaw_coeffs(n, 1));
  const auto config = kahs::SensingConfig::make(n, k);
  for (auto _ : state) {
    kahs::RangeSumOracle oracle(tree);
    auto result = kahs::k_ahs_sense(oracle, config);
    benchmark::DoNotOptimize(result.estimate.entries.data());
  }
  state.counters["measurements"] = static_cast<double>(config.measurements());
}
BENCHMARK(BM_SenseRangeSum)->Args({1 << 12, 16})->Args({1 << 16, 256})->Args({1 << 18, 4506})
    ->Unit(benchmark::kMillisecond);

void BM_CoefficientTree(benchmark::State& state) {
  const auto coeffs = powerlaw_coeffs(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    kahs::CoefficientTree tree(coeffs);
    benchmark::DoNotOptimize(tree.padded_dimension());
  }
}
BENCHMARK(BM_CoefficientTree)->Arg(1 << 18)->Unit(benchmark::kMillisecond);

void BM_Analyze(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(1));
  const auto t = kahs::make_transform(static_cast<kahs::TransformKind>(state.range(0)), side);
  const auto img = powerlaw_coeffs(side * side, 3);
  for (auto _ : state) {
    auto c = t.analyze(img);
    benchmark::DoNotOptimize(c.data());
  }
}
BENCHMARK(BM_Analyze)
    ->Args({static_cast<long>(kahs::TransformKind::haar2d), 512})
    ->Args({static_cast<long>(kahs::TransformKind::cdf97_2d), 512})
    ->Unit(benchmark::kMillisecond);

void BM_AnalyzeAdjoint(benchmark::State& state) {
  const auto t = kahs::cdf97_2d_pair(static_cast<std::size_t>(state.range(0)));
  const auto c = powerlaw_coeffs(t.dimension(), 4);
  for (auto _ : state) {
    auto v = t.analyze_adjoint(c);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_AnalyzeAdjoint)->Arg(512)->Unit(benchmark::kMillisecond);

// One node on the reference path costs a full adjoint transform.
void BM_SensingVector(benchmark::State& state) {
  const std::size_t side = 256;
  const auto t = kahs::cdf97_2d_pair(side);
  const auto img = powerlaw_coeffs(side * side, 5);
  kahs::InnerProductOracle oracle(img, t);
  const kahs::NodeId node{static_cast<int>(state.range(0)), 3};
  for (auto _ : state) {
    auto v = oracle.sensing_vector(node);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_SensingVector)->Arg(0)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro benchmark_main archive carries stale LTO bytecode; link the shared library instead.
BENCHMARK_MAIN();

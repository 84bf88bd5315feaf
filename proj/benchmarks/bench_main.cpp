#include "lsstream/estimator.hpp"
#include "lsstream/pipeline.hpp"
#include "lsstream/samplers.hpp"

#include <benchmark/benchmark.h>

using namespace lsstream;

namespace {

Matrix gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> z;
  return Matrix::NullaryExpr(rows, cols, [&](Eigen::Index, Eigen::Index) { return z(rng); });
}

void BM_RlsUpdate(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const int K = 10;
  Rng rng(1);
  RlsState s = init_estimator(gaussian(2 * p, p, rng), gaussian(2 * p, K, rng));
  const Matrix xs = gaussian(256, p, rng);
  const Matrix ys = gaussian(256, K, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    rls_update(s, xs.row(i % 256).transpose(), ys.row(i % 256).transpose());
    ++i;
  }
  state.SetComplexityN(p);
}
BENCHMARK(BM_RlsUpdate)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

void BM_Leverage(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Rng rng(2);
  SamplerConfig c;
  c.n0 = 2 * p;
  SamplerState s = pilot_fit(gaussian(2 * p, 1, rng), gaussian(2 * p, p, rng), c, 3);
  const Vector x = gaussian(p, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(leverage(s, x));
  state.SetComplexityN(p);
}
BENCHMARK(BM_Leverage)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

// One pipeline step at q = 1 (every step selected) versus q -> 0 with the
// precision update off (every step rejected).
void BM_PipelineStep(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const bool selected = state.range(1) != 0;
  const int K = 4;
  Rng rng(4);
  PipelineConfig cfg;
  cfg.sampler.mode = SamplerMode::kBernoulli;
  cfg.sampler.q = selected ? 1.0 : 1e-12;
  cfg.sampler.u = 0.0;
  cfg.sampler.n0 = 2 * p;
  OnlineEstimator est(gaussian(2 * p, K, rng), gaussian(2 * p, p, rng), cfg);
  const Matrix xs = gaussian(256, p, rng);
  const Matrix ys = gaussian(256, K, rng);
  long t = 0;
  for (auto _ : state) {
    const auto i = static_cast<Eigen::Index>(t % 256);
    benchmark::DoNotOptimize(est.step(ys.row(i).transpose(), xs.row(i).transpose(), t));
    ++t;
  }
  state.SetLabel(selected ? "selected" : "rejected");
}
BENCHMARK(BM_PipelineStep)->ArgsProduct({{50, 100, 200}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();

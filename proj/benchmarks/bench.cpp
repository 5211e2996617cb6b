#include "aspca/estimators.hpp"
#include "aspca/linalg.hpp"
#include "aspca/metrics.hpp"
#include "aspca/packing.hpp"
#include "aspca/spiked_model.hpp"

#include <benchmark/benchmark.h>

using namespace aspca;

namespace {

Matrix symmetric(int T, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a(T, T);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.normal();
  return a;
}

Dataset sparse_data(int n, int N, std::uint64_t seed) {
  Rng rng(seed);
  const int sizes[] = {20};
  const LqSpaceSpec spec{1.0, {5.0}, N, 1};
  BasisOptions opt;
  opt.equal_weights = true;
  const SpikedCovariance model({5.0}, make_sparse_basis(spec, sizes, rng, opt));
  return sample_dataset(model, n, rng);
}

}  // namespace

static void BM_SymEigen(benchmark::State& state) {
  const Matrix a = symmetric(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eigen(a));
}
BENCHMARK(BM_SymEigen)->Arg(50)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

static void BM_Aspca(benchmark::State& state) {
  const Dataset d = sparse_data(400, static_cast<int>(state.range(0)), 2);
  EstimatorConfig cfg;
  cfg.gamma1 = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(aspca::aspca(CovarianceSource::from_data(d.observations), cfg));
}
BENCHMARK(BM_Aspca)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_Opca(benchmark::State& state) {
  const Dataset d = sparse_data(400, static_cast<int>(state.range(0)), 3);
  const CovarianceSource src = CovarianceSource::from_data(d.observations);
  for (auto _ : state) benchmark::DoNotOptimize(opca(src, 1));
}
BENCHMARK(BM_Opca)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_KlSpiked(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const std::vector<double> l{5.0, 2.0, 1.0};
  const Matrix a = Matrix::Identity(N, 3);
  Matrix b = Matrix::Identity(N, 3);
  b.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(N)));
  b.col(1).setZero();
  b(N - 1, 1) = 1.0;
  b.col(2).setZero();
  b(N - 2, 2) = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(kl_spiked(a, b, l, 100.0));
}
BENCHMARK(BM_KlSpiked)->Arg(100)->Arg(2000);

static void BM_YmStar(benchmark::State& state) {
  PackingLimits lim;
  lim.max_points = 100000;
  for (auto _ : state) benchmark::DoNotOptimize(build_Ym_star(static_cast<int>(state.range(0)), lim));
}
BENCHMARK(BM_YmStar)->Arg(9)->Arg(14)->Arg(18)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

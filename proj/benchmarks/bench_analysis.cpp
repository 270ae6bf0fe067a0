#include <benchmark/benchmark.h>

#include <vector>

#include "tdqmc/analysis.hpp"
#include "tdqmc/rng.hpp"

using namespace tdqmc;

static void BM_KdeDensity(benchmark::State& state) {
    auto g = make_grid(-60.0, 60.0, 1024);
    RandomStream rng(3, {});
    std::vector<double> s(static_cast<std::size_t>(state.range(0)));
    for (auto& x : s) x = 3.0 * rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(kde_density(s, *g));
}
BENCHMARK(BM_KdeDensity)->Arg(1000)->Arg(4000);

static void BM_DensityMatrix(benchmark::State& state) {
    auto g = make_grid(-60.0, 60.0, 1024);
    WaveEnsemble waves(g, static_cast<std::size_t>(state.range(0)));
    for (std::size_t k = 0; k < waves.count(); ++k) waves.set(k, gaussian_wave(g, 0.01 * k, 1.0).amplitudes);
    for (auto _ : state) benchmark::DoNotOptimize(build_density_matrix(waves).rho.data());
}
BENCHMARK(BM_DensityMatrix)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Coherence(benchmark::State& state) {
    auto g = make_grid(-60.0, 60.0, 1024);
    WaveEnsemble waves(g, 1000);
    for (std::size_t k = 0; k < waves.count(); ++k) waves.set(k, gaussian_wave(g, 0.001 * k, 1.0).amplitudes);
    for (auto _ : state) benchmark::DoNotOptimize(coherence(waves));
}
BENCHMARK(BM_Coherence)->Unit(benchmark::kMillisecond);

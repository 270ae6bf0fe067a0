#include <benchmark/benchmark.h>

#include <vector>

#include "tdqmc/potentials.hpp"
#include "tdqmc/rng.hpp"

using namespace tdqmc;

namespace {

std::vector<double> cloud(std::size_t m) {
    RandomStream rng(7, {});
    std::vector<double> x(m);
    for (auto& v : x) v = 2.0 * rng.normal();
    return x;
}

void run(benchmark::State& state, CouplingMode mode, bool cutoff) {
    const auto m = static_cast<std::size_t>(state.range(0));
    auto g = make_grid(-60.0, 60.0, 1024);
    const auto walkers = cloud(m);
    const double sigma = sigma_update(walkers, 0.6, 1e-3);
    EffectivePotentialOptions opts;
    opts.kernel_cutoff = cutoff;
    RowMatrix out(static_cast<Eigen::Index>(m), 1024);
    for (auto _ : state) {
        out.setZero();
        accumulate_effective_potentials(*g, walkers, sigma, 1.0, mode, opts, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetComplexityN(state.range(0));
}

}  // namespace

static void BM_EffectivePotentialDense(benchmark::State& state) { run(state, CouplingMode::optimized, false); }
static void BM_EffectivePotentialCutoff(benchmark::State& state) { run(state, CouplingMode::optimized, true); }
static void BM_EffectivePotentialUltra(benchmark::State& state) { run(state, CouplingMode::ultra_correlated, false); }
static void BM_EffectivePotentialMeanField(benchmark::State& state) { run(state, CouplingMode::mean_field, false); }

BENCHMARK(BM_EffectivePotentialDense)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_EffectivePotentialCutoff)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EffectivePotentialUltra)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EffectivePotentialMeanField)->Arg(1000)->Unit(benchmark::kMillisecond);

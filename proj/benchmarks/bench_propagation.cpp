#include <benchmark/benchmark.h>

#include "tdqmc/exact_solver.hpp"
#include "tdqmc/grid.hpp"

using namespace tdqmc;

static void BM_SplitStepReal(benchmark::State& state) {
    auto g = make_grid(-60.0, 60.0, static_cast<std::size_t>(state.range(0)));
    auto w = gaussian_wave(g, 0.0, 1.0, 0.5);
    const auto v = v_en_grid(g, NuclearFrame::atom());
    const SplitStepPropagator prop(g, 0.01, TimeMode::real);
    for (auto _ : state) {
        prop.step(w.amplitudes, v.values);
        benchmark::DoNotOptimize(w.amplitudes.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SplitStepReal)->Arg(512)->Arg(1024)->Arg(2048);

static void BM_SplitStepImaginary(benchmark::State& state) {
    auto g = make_grid(-60.0, 60.0, 1024);
    auto w = gaussian_wave(g, 0.0, 1.0);
    const auto v = v_en_grid(g, NuclearFrame::atom());
    const SplitStepPropagator prop(g, 0.02, TimeMode::imaginary);
    for (auto _ : state) {
        prop.step(w.amplitudes, v.values);
        benchmark::DoNotOptimize(w.amplitudes.data());
    }
}
BENCHMARK(BM_SplitStepImaginary);

// RK2 walker update: two spectral velocity evaluations on one wave
static void BM_BohmVelocity(benchmark::State& state) {
    auto g = make_grid(-60.0, 60.0, 1024);
    const auto w = gaussian_wave(g, 0.3, 1.2, 0.7);
    for (auto _ : state) {
        const SpectralEvaluator eval(w.amplitudes, *g);
        const double v1 = bohm_velocity(eval, 0.4).velocity;
        benchmark::DoNotOptimize(bohm_velocity(eval, 0.4 + 0.005 * v1).velocity);
    }
}
BENCHMARK(BM_BohmVelocity);

static void BM_ExactStep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto g = make_grid(-60.0, 60.0, n);
    auto released = NuclearFrame::atom();
    released.active = false;
    const auto h = TwoBodyHamiltonian::from_frame(g, released, 1.0);
    const auto phi = gaussian_wave(g, 0.0, 1.0);
    auto psi = product_state(phi, phi);
    ExactEvolveOptions opts;
    opts.snapshot_stride = 1.0;
    for (auto _ : state) {
        psi.time = 0.0;
        exact_evolve(psi, 0.01, h, opts, [](const ExactState2D&) {});
    }
}
BENCHMARK(BM_ExactStep)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

#include <benchmark/benchmark.h>

#include "fray/transparency.hpp"

using namespace fray;

static RaySamples planar(size_t k) {
    RaySamples s;
    for (size_t i = 0; i < k; ++i) {
        const double t = 3.0 * (i + 0.5) / k;
        s.t.push_back(t);
        s.f.push_back(1.5 - t);
        s.grad.push_back(Vec3(0, 0, -1));
        s.grad_dot_d.push_back(-1.0);
    }
    s.flagged.assign(k, false);
    return s;
}

static void BM_Quadrature(benchmark::State& state) {
    const RaySamples s = planar(static_cast<size_t>(state.range(0)));
    const ScaleParam scale{60.0, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(quadrature(s, scale));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Quadrature)->Arg(64)->Arg(128)->Arg(1024);

static void BM_AdaptiveCoeff(benchmark::State& state) {
    const RaySamples s = planar(static_cast<size_t>(state.range(0)));
    const ScaleParam scale{60.0, 1.0};
    for (auto _ : state) benchmark::DoNotOptimize(adaptive_coeff(s, scale));
}
BENCHMARK(BM_AdaptiveCoeff)->Arg(64)->Arg(128);

BENCHMARK_MAIN();

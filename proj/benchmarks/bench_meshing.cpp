#include <benchmark/benchmark.h>

#include "fray/metrics.hpp"

using namespace fray;

static void BM_MarchingCubesSphere(benchmark::State& state) {
    const AnalyticField field(AnalyticSdf::sphere(Vec3::Zero(), 0.8));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            marching_cubes(field, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_MarchingCubesSphere)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_Chamfer(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    PointCloud a, b;
    for (long i = 0; i < state.range(0); ++i) {
        a.points.emplace_back(uni(rng), uni(rng), uni(rng));
        b.points.emplace_back(uni(rng), uni(rng), uni(rng));
    }
    for (auto _ : state) benchmark::DoNotOptimize(chamfer(a, b));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Chamfer)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

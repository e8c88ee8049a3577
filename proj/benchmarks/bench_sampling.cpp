#include <benchmark/benchmark.h>

#include "fray/sampling.hpp"

using namespace fray;

static void BM_ImportanceSamples(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    std::vector<double> t(static_cast<size_t>(k));
    RayQuadrature q;
    for (int i = 0; i < k; ++i) {
        t[static_cast<size_t>(i)] = 3.0 * i / (k - 1);
        q.weight.push_back(std::exp(-0.5 * (i - k / 2) * (i - k / 2) / 9.0));
    }
    auto rng = make_stream_rng(1, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(importance_samples(q, t, 64, true, rng));
}
BENCHMARK(BM_ImportanceSamples)->Arg(64)->Arg(128);

static void BM_HierarchicalPassAnalytic(benchmark::State& state) {
    const AnalyticField field(AnalyticSdf::bumpy_sphere(0.8, 0.04, 10.0));
    const Ray ray = make_bounded_ray(Vec3(0, 0, -3), Vec3(0, 0, 1));
    SamplerConfig cfg;
    cfg.n_uniform = cfg.n_importance = static_cast<int>(state.range(0));
    const ScaleParam scale{60.0, 1.0};
    uint64_t stream = 0;
    for (auto _ : state) {
        auto rng = make_stream_rng(7, stream++);
        benchmark::DoNotOptimize(
            hierarchical_pass(ray, field, scale, cfg, rng, true));
    }
}
BENCHMARK(BM_HierarchicalPassAnalytic)->Arg(32)->Arg(64);

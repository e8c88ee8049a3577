#include <benchmark/benchmark.h>

#include "fray/fields.hpp"
#include "fray/trainer.hpp"

using namespace fray;

static ModelConfig bench_model(int hidden, int layers) {
    ModelConfig cfg;
    cfg.hidden = hidden;
    cfg.layers = layers;
    cfg.feature = hidden;
    cfg.color_hidden = hidden;
    cfg.color_layers = 2;
    cfg.bands = 8;
    cfg.seed = 1;
    return cfg;
}

static void BM_CompositeEval(benchmark::State& state) {
    const NeuralSdfModel m =
        make_model(bench_model(static_cast<int>(state.range(0)), 3));
    const Mat points = Mat::Random(3, 128) * 1.2;
    for (auto _ : state) benchmark::DoNotOptimize(composite_eval(m, points));
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_CompositeEval)->Arg(32)->Arg(64)->Arg(128);

static void BM_CompositeValuesOnly(benchmark::State& state) {
    const NeuralSdfModel m =
        make_model(bench_model(static_cast<int>(state.range(0)), 3));
    const Mat points = Mat::Random(3, 128) * 1.2;
    for (auto _ : state) benchmark::DoNotOptimize(composite_eval_values(m, points));
    state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_CompositeValuesOnly)->Arg(32)->Arg(64)->Arg(128);

static void BM_RayBackward(benchmark::State& state) {
    NeuralSdfModel m = make_model(bench_model(static_cast<int>(state.range(0)), 3));
    RayBatchEntry e;
    e.ray = make_bounded_ray(Vec3(0, 0, -3), Vec3(0, 0, 1));
    for (int i = 0; i < 64; ++i)
        e.t.push_back(e.ray.t_near + (e.ray.t_far - e.ray.t_near) * (i + 0.5) / 64);
    e.reference = Vec3(0.4, 0.5, 0.6);
    for (auto _ : state)
        benchmark::DoNotOptimize(loss_on_batch(m, {e}, 0.1, Vec3::Ones()));
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_RayBackward)->Arg(24)->Arg(48);

#include <random>

#include <benchmark/benchmark.h>

#include "ssmrecon/metrics.hpp"
#include "ssmrecon/regressor.hpp"
#include "ssmrecon/slicer.hpp"
#include "ssmrecon/surface_index.hpp"
#include "ssmrecon/synth.hpp"

using namespace ssmrecon;

namespace {

TriMesh liver(int level) {
    SynthConfig cfg;
    cfg.levels = {level};
    return generate_subject(cfg, 0).mesh;
}

}  // namespace

static void BM_SignedVolume(benchmark::State& state) {
    const TriMesh m = liver(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(signed_volume(m));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(m.faces.size()));
}
BENCHMARK(BM_SignedVolume)->Arg(3)->Arg(4);

static void BM_SurfaceIndexQuery(benchmark::State& state) {
    const TriMesh m = liver(4);
    const SurfaceIndex index(m);
    const auto points = surface_samples(liver(3), 1024, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.distance(points[i++ % points.size()]));
    }
}
BENCHMARK(BM_SurfaceIndexQuery);

static void BM_Chamfer(benchmark::State& state) {
    const TriMesh a = liver(3);
    SynthConfig cfg;
    cfg.levels = {3};
    const TriMesh b = generate_subject(cfg, 1).mesh;
    for (auto _ : state) benchmark::DoNotOptimize(chamfer(a, b, static_cast<std::size_t>(state.range(0)), 0));
}
BENCHMARK(BM_Chamfer)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_Rasterize(benchmark::State& state) {
    const TriMesh m = liver(4);
    const Box3 box = bounding_box(m);
    const auto loops = cross_section(m, Plane{box.min.x() + 0.5 * box.extent().x()});
    const Window2 window = yz_window(box);
    const int r = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(rasterize(loops, window, r));
}
BENCHMARK(BM_Rasterize)->Arg(64)->Arg(192)->Arg(512);

static void BM_ForwardAndGradient(benchmark::State& state) {
    const int d = 3 * 192 * 192, h = static_cast<int>(state.range(0)), k = 20;
    std::mt19937_64 rng(1);
    const MlpParams p = MlpParams::glorot(d, h, k, rng());
    std::bernoulli_distribution on(0.3);
    std::vector<Sample> batch(16);
    for (Sample& s : batch) {
        s.input.size = d;
        for (int j = 0; j < d; ++j) {
            if (on(rng)) s.input.active.push_back(j);
        }
        s.target = Eigen::VectorXd::Zero(k);
    }
    for (auto _ : state) benchmark::DoNotOptimize(gradient(p, batch));
}
BENCHMARK(BM_ForwardAndGradient)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

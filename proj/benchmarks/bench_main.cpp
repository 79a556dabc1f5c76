#include <benchmark/benchmark.h>

#include "acdlab/diagnostics.hpp"
#include "acdlab/processes.hpp"
#include "acdlab/rng.hpp"
#include "acdlab/sde.hpp"
#include "acdlab/timechange.hpp"

namespace {

using namespace acdlab;

void BM_GaussianStream(benchmark::State& state) {
    Rng rng(Seed{1});
    double acc = 0.0;
    for (auto _ : state) {
        acc += rng.gaussian();
    }
    benchmark::DoNotOptimize(acc);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GaussianStream);

void BM_EulerMaruyama(benchmark::State& state) {
    DiffusionSpec spec;
    spec.sigma = [](double, double) { return 1.0; };
    spec.drift = [](double, double x) { return -x; };
    const TimeGrid grid = make_uniform_grid(1.0, state.range(0));
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(euler_maruyama(spec, grid, 0.0, Seed{i++}).values.back());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerMaruyama)->Arg(1000)->Arg(10000);

void BM_ReflBmLimitPath(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, state.range(0));
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(refl_bm_limit(grid, Seed{i++}).values.back());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ReflBmLimitPath)->Arg(1000)->Arg(10000);

void BM_ReflBmPrelimitPath(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, 1000);
    const unsigned n = static_cast<unsigned>(state.range(0));
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(refl_bm_prelimit(n, grid, Seed{i++}).values.back());
    }
}
BENCHMARK(BM_ReflBmPrelimitPath)->Arg(1)->Arg(64);

void BM_PoissonPrelimitPath(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, 1000);
    std::uint64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(poisson_prelimit(256, grid, Seed{i++}).values.back());
    }
}
BENCHMARK(BM_PoissonPrelimitPath);

void BM_AlmostContinuityScan(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, state.range(0));
    const Path y = sample_brownian(grid, Seed{1});
    const Path z = sample_brownian(grid, Seed{2});
    for (auto _ : state) {
        benchmark::DoNotOptimize(almost_continuity_scan(y, z, 0.01).events.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AlmostContinuityScan)->Arg(1000)->Arg(10000);

void BM_FddTwoSample(benchmark::State& state) {
    const TimeGrid grid = make_uniform_grid(1.0, 4);
    PathEnsemble a, b;
    a.grid = b.grid = grid;
    const std::size_t n = state.range(0);
    a.paths.resize(n);
    b.paths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        a.paths[i] = sample_brownian(grid, derive_path_seed(Seed{10}, i)).values;
        b.paths[i] = sample_brownian(grid, derive_path_seed(Seed{11}, i)).values;
    }
    const std::vector<double> times{0.5, 1.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(fdd_two_sample(a, b, times, 99, Seed{5}).value);
    }
}
BENCHMARK(BM_FddTwoSample)->Arg(1000)->Arg(10000);

} // namespace

BENCHMARK_MAIN();

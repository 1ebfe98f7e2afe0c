#include <benchmark/benchmark.h>

#include "lobexec/montecarlo.hpp"
#include "lobexec/oracle.hpp"
#include "lobexec/valuation.hpp"

using namespace lobexec;

namespace {

Market bm() {
    return {LevyModel(-0.0018, 4.011e-4), BookShape::block(1000.0, -1.0), Resilience::exponential(5.0), 1e-2};
}
Market lvg() {
    return {LevyModel(-0.0018, 0.0, LinearVarianceGamma{{0.02, 0.6, -0.002}}), BookShape::block(1000.0, -1.0),
            Resilience::exponential(5.0), 1e-2};
}

BoundaryTable table_for(const Market& m, double y_max) {
    TabulateOptions o;
    o.y_max = y_max;
    return tabulate(m, o);
}

void BM_SolveBeta(benchmark::State& state) {
    const Market m = state.range(0) == 0 ? bm() : lvg();
    double y = 1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_beta(m, y));
        y = y < 9000.0 ? y * 1.7 : 1.0;
    }
}
BENCHMARK(BM_SolveBeta)->Arg(0)->Arg(1);

void BM_Tabulate(benchmark::State& state) {
    const Market m = state.range(0) == 0 ? bm() : lvg();
    TabulateOptions o;
    o.y_max = 1e4;
    o.nodes = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(tabulate(m, o));
}
BENCHMARK(BM_Tabulate)->Args({0, 2048})->Args({1, 512})->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
    const Market m = bm();
    const BoundaryTable t = table_for(m, 1e4);
    for (auto _ : state) benchmark::DoNotOptimize(simulate(t, m, 1e4, 0.0));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

void BM_Value(benchmark::State& state) {
    const Market m = bm();
    const BoundaryTable t = table_for(m, 1e4);
    const Valuation v(m, t);
    double y = 10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(v.value(y, -50.0));
        y = y < 9000.0 ? y + 97.0 : 10.0;
    }
}
BENCHMARK(BM_Value);

void BM_Oracle(benchmark::State& state) {
    const Market m = bm();
    GridSpec g;
    g.n_y = g.n_z = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(solve_dp(m, g));
}
BENCHMARK(BM_Oracle)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
    const Market m = bm();
    const BoundaryTable t = table_for(m, 200.0);
    const StrategyPath p = simulate(t, m, 100.0, 0.0);
    const PathSampler s(m.levy, make_time_grid(p.t_bar, 0.01, {p.wait_time}), 1e-3, 1);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_utility(p, m, s, 0.0, 1.0, 10000));
    state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_MonteCarlo)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

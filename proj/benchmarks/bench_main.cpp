#include "buckstab/cascade.hpp"
#include "buckstab/sim.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace buckstab;

StageSpec source_stage() {
    StageSpec s;
    s.params.v_in = 100.0;
    s.params.l = 1.67e-4;
    s.params.c = 3.75e-6;
    s.params.r_load = 5.0;
    s.v_ref = 50.0;
    s.gains.kp = 0.0093602;
    s.gains.ki = 275.3;
    return s;
}

StageSpec load_stage() {
    StageSpec s;
    s.params.v_in = 50.0;
    s.params.l = 3.0e-6;
    s.params.c = 2.344e-5;
    s.params.r_load = 0.8;
    s.v_ref = 25.0;
    s.gains.kp = 0.01956;
    s.gains.ki = 537.4;
    return s;
}

void bm_poly_roots(benchmark::State& state) {
    Polynomial p = close_loop(source_stage()).char_poly *
                   close_loop(load_stage()).char_poly;
    for (auto _ : state) {
        RootSet roots = poly_roots(p);
        benchmark::DoNotOptimize(roots);
    }
}
BENCHMARK(bm_poly_roots);

void bm_close_loop(benchmark::State& state) {
    StageSpec s = source_stage();
    for (auto _ : state) {
        ClosedLoopSet loop = close_loop(s);
        benchmark::DoNotOptimize(loop);
    }
}
BENCHMARK(bm_close_loop);

void bm_build_cascade(benchmark::State& state) {
    StageSpec s1 = source_stage();
    StageSpec s2 = load_stage();
    for (auto _ : state) {
        CascadeModel m = build_cascade(s1, s2);
        benchmark::DoNotOptimize(m);
    }
}
BENCHMARK(bm_build_cascade);

void bm_middlebrook_check(benchmark::State& state) {
    CascadeModel m = build_cascade(source_stage(), load_stage());
    for (auto _ : state) {
        MiddlebrookResult r = middlebrook_check(m.minor_loop);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(bm_middlebrook_check);

void bm_simulate_steps(benchmark::State& state) {
    StageSpec s = source_stage();
    SimConfig cfg;
    cfg.duration = 0.01;
    cfg.dt = 1e-6;
    cfg.initial_state = SimConfig::InitialState::zero;
    std::size_t steps = 0;
    for (auto _ : state) {
        SimTrace trace = simulate_single(s, cfg);
        steps += trace.time.size();
        benchmark::DoNotOptimize(trace);
    }
    state.SetItemsProcessed(static_cast<int64_t>(steps));
}
BENCHMARK(bm_simulate_steps);

}  // namespace

BENCHMARK_MAIN();

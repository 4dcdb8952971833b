#include <memory>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "v2gsim/case.hpp"
#include "v2gsim/dynamic_model.hpp"
#include "v2gsim/network.hpp"
#include "v2gsim/simulator.hpp"
#include "v2gsim/stability.hpp"

namespace {

using namespace v2gsim;

std::shared_ptr<const DynamicModel> model(int which) {
    static const auto case3 = prepare_model(load_case_file(V2GSIM_BENCH_DATA_DIR "/case3.json"));
    static const auto case39 = prepare_model(load_case_file(V2GSIM_BENCH_DATA_DIR "/case39.json"));
    return which == 3 ? case3 : case39;
}

// Network solve from the previous solution after a small rotor move, the
// common case inside an RK4 stage.
void BM_NetworkSolve(benchmark::State& state) {
    auto m = model(static_cast<int>(state.range(0)));
    NetworkSolver net(*m);
    std::vector<double> delta;
    for (const auto& mi : m->machines) {
        delta.push_back(mi.delta0 + 1e-3);
    }
    std::vector<double> pevg(static_cast<std::size_t>(m->bus_count()), 0.0);
    Eigen::VectorXcd guess(m->bus_count());
    for (int i = 0; i < m->bus_count(); ++i) {
        guess(i) = std::polar(m->pf.v(i), m->pf.theta(i));
    }
    for (auto _ : state) {
        auto sol = net.solve(delta, pevg, guess);
        benchmark::DoNotOptimize(sol.pe.data());
    }
}
BENCHMARK(BM_NetworkSolve)->Arg(3)->Arg(39);

void BM_Rk4Step(benchmark::State& state) {
    auto m = model(static_cast<int>(state.range(0)));
    Scenario sc;
    sc.control.h_mw_per_hz = state.range(1) * 0.4 * m->sys.total_load_mw();
    sc.control.trigger_enabled = false;
    Simulator sim(m, sc);
    auto start = sim.initial_state();
    start.delta(1) += 0.05;
    sim.reset(start);
    for (auto _ : state) {
        sim.step(1e-3);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Rk4Step)->Args({3, 0})->Args({39, 0})->Args({39, 1});

void BM_Linearize(benchmark::State& state) {
    auto m = model(static_cast<int>(state.range(0)));
    const double h = 0.4 * m->sys.total_load_mw();
    for (auto _ : state) {
        auto sm = linearize(*m, h);
        benchmark::DoNotOptimize(sm.a.data());
    }
}
BENCHMARK(BM_Linearize)->Arg(3)->Arg(39)->Unit(benchmark::kMillisecond);

void BM_Alpha(benchmark::State& state) {
    const auto sm = linearize(*model(39), 0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(alpha(sm).alpha);
    }
}
BENCHMARK(BM_Alpha)->Unit(benchmark::kMicrosecond);

// One ten-second post-disturbance run, the unit of work in CCT and RAS sweeps.
void BM_TenSecondRun(benchmark::State& state) {
    auto m = model(3);
    Scenario sc;
    Simulator sim(m, sc);
    auto start = sim.initial_state();
    start.delta(1) += 0.5;
    for (auto _ : state) {
        auto trace = simulate(m, sc, start);
        benchmark::DoNotOptimize(trace.samples.data());
    }
}
BENCHMARK(BM_TenSecondRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

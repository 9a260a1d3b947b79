// Serial vs OpenMP timings for the batch kernels.

#include <benchmark/benchmark.h>

#include "torso/kernels.hpp"

using namespace torso;

namespace {

const CalibrationProfile& profile() {
    static const auto p = harness::default_scenario().user.ideal_profile();
    return p;
}

void BM_VelocitySpaceSerial(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::velocity_space_serial(profile(), {}, n, n));
    state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_VelocitySpaceParallel(benchmark::State& state) {
    const auto n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::velocity_space_parallel(profile(), {}, n, n));
    state.SetItemsProcessed(state.iterations() * n * n);
}

harness::StiffnessStudyConfig stiffness_config() {
    harness::StiffnessStudyConfig cfg;
    cfg.profile = coupling::ForceProfile::staircase(33.65, 2.0);
    cfg.sim.dt = 1e-3;
    return cfg;
}

std::vector<double> kappas(int n) {
    std::vector<double> k;
    for (int i = 0; i < n; ++i) k.push_back(1500.0 + 250.0 * i);
    return k;
}

void BM_StiffnessSerial(benchmark::State& state) {
    const auto cfg = stiffness_config();
    const auto k = kappas(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::stiffness_serial(k, cfg));
}

void BM_StiffnessParallel(benchmark::State& state) {
    const auto cfg = stiffness_config();
    const auto k = kappas(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::stiffness_parallel(k, cfg));
}

std::vector<vehicle::RunTrace> traces(int n) {
    auto sc = harness::default_scenario();
    sc.calibrate = false;
    std::vector<vehicle::RunTrace> out;
    for (int i = 0; i < n; ++i) {
        sc.seed = static_cast<std::uint64_t>(i + 1);
        out.push_back(harness::run_closed_loop(sc).trace);
    }
    return out;
}

void BM_EvaluateSerial(benchmark::State& state) {
    static const auto tr = traces(16);
    static const auto path = vehicle::build_figure8();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::evaluate_serial(tr, path));
}

void BM_EvaluateParallel(benchmark::State& state) {
    static const auto tr = traces(16);
    static const auto path = vehicle::build_figure8();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::evaluate_parallel(tr, path));
}

} // namespace

BENCHMARK(BM_VelocitySpaceSerial)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VelocitySpaceParallel)->Arg(101)->Arg(401)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StiffnessSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StiffnessParallel)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "poet/kernels.hpp"
#include "poet/rng.hpp"
#include "poet/threshold.hpp"

namespace {

using namespace poet;

Matrix residuals(Index p, Index T) {
    Engine rng = make_engine(11);
    return standard_normal(rng, p, T);
}

void BM_MomentsSerial(benchmark::State& state) {
    const Matrix u = residuals(state.range(0), 300);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::residual_moments_serial(u));
}

void BM_MomentsParallel(benchmark::State& state) {
    const Matrix u = residuals(state.range(0), 300);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::residual_moments_parallel(u));
}

struct ThresholdInput {
    Matrix raw;
    Matrix tau;
};

ThresholdInput threshold_input(Index p) {
    const kernels::Moments m = kernels::residual_moments_parallel(residuals(p, 300));
    return {m.sigma, kernels::adaptive_tau_parallel(m.theta, 0.5 * omega(p, 300))};
}

void BM_ThresholdSerial(benchmark::State& state) {
    const ThresholdInput in = threshold_input(state.range(0));
    const ShrinkageRule rule = ShrinkageRule::scad();
    for (auto _ : state) benchmark::DoNotOptimize(kernels::threshold_serial(in.raw, in.tau, rule));
}

void BM_ThresholdParallel(benchmark::State& state) {
    const ThresholdInput in = threshold_input(state.range(0));
    const ShrinkageRule rule = ShrinkageRule::scad();
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::threshold_parallel(in.raw, in.tau, rule));
    }
}

void BM_TauSerial(benchmark::State& state) {
    const Matrix theta = kernels::residual_moments_parallel(residuals(state.range(0), 300)).theta;
    for (auto _ : state) benchmark::DoNotOptimize(kernels::adaptive_tau_serial(theta, 0.1));
}

void BM_TauParallel(benchmark::State& state) {
    const Matrix theta = kernels::residual_moments_parallel(residuals(state.range(0), 300)).theta;
    for (auto _ : state) benchmark::DoNotOptimize(kernels::adaptive_tau_parallel(theta, 0.1));
}

}  // namespace

BENCHMARK(BM_MomentsSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MomentsParallel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ThresholdSerial)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdParallel)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TauSerial)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TauParallel)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

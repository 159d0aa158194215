#include <benchmark/benchmark.h>

#include <cmath>

#include "fracbessel/fourier_bessel.hpp"
#include "fracbessel/mittag_leffler.hpp"
#include "fracbessel/solver.hpp"
#include "fracbessel/specfun.hpp"

using namespace fracbessel;

namespace {

void BM_TwoParamML(benchmark::State& state) {
    const double z = -static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(ml_two_param(0.8, 1.2, z, 1e-14));
}
BENCHMARK(BM_TwoParamML)->Arg(1)->Arg(10)->Arg(50);

// Two commensurate exponents take the lattice path.
void BM_MultinomialLattice(benchmark::State& state) {
    const MultinomialMittagLeffler f({1.5, 1.1}, 2.5);
    const double s = static_cast<double>(state.range(0));
    const double args[] = {-0.5 * s, -s};
    for (auto _ : state) benchmark::DoNotOptimize(f.evaluate(args));
}
BENCHMARK(BM_MultinomialLattice)->Arg(1)->Arg(10)->Arg(40);

void BM_MultinomialLayered(benchmark::State& state) {
    const MLParams p{{0.73, 1.41}, 1.7, {-0.4, -static_cast<double>(state.range(0))}};
    for (auto _ : state) benchmark::DoNotOptimize(detail::ml_multinomial_layered(p, 1e-12));
}
BENCHMARK(BM_MultinomialLayered)->Arg(1)->Arg(10);

void BM_BesselZeros(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(bessel_zeros(BesselOrder(1.5), static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_BesselZeros)->Arg(16)->Arg(64)->Arg(256);

void BM_Expand(benchmark::State& state) {
    const BesselOrder nu(1.0);
    const auto K = static_cast<std::size_t>(state.range(0));
    const BesselZeroTable z = bessel_zeros(nu, K);
    const SourceFunction f =
        SourceFunction::separable(TProfile::sine(1.0, 3.0), XProfile::compliant(nu));
    for (auto _ : state) benchmark::DoNotOptimize(fb_expand(f, nu, z, {1.0, 256}));
}
BENCHMARK(BM_Expand)->Arg(8)->Arg(32);

void BM_SolveMode(benchmark::State& state) {
    const TimeKernels k(TimeOperator(1.5, {{-1.0, 0.5}}));
    const auto n = static_cast<std::size_t>(state.range(0));
    const SampledFunction f = SampledFunction::sample(1.0, n, [](double t) { return std::sin(3.0 * t); });
    for (auto _ : state) benchmark::DoNotOptimize(solve_mode(k, 1, 3.8317, f, 0.5));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveMode)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond)->Complexity();

}  // namespace
BENCHMARK_MAIN();

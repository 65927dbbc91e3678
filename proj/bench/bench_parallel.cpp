// Serial vs OpenMP: noise sampling and replica ensembles.

#include <benchmark/benchmark.h>

#include "she/ensemble.hpp"
#include "she/noise.hpp"
#include "she/profiles.hpp"
#include "she/sigma.hpp"
#include "she/solver.hpp"

using namespace she;

namespace {

const Grid kNoiseGrid = Grid::make(5.0, 0.02, 0.1);

void BM_SampleNoiseSerial(benchmark::State& st) {
    for (auto _ : st) {
        benchmark::DoNotOptimize(sample_noise_serial({1, 0, kNoiseGrid}).increments.data());
    }
    st.SetItemsProcessed(st.iterations() * kNoiseGrid.n_steps() * kNoiseGrid.cells());
}

void BM_SampleNoiseOpenMP(benchmark::State& st) {
    for (auto _ : st) {
        benchmark::DoNotOptimize(sample_noise({1, 0, kNoiseGrid}).increments.data());
    }
    st.SetItemsProcessed(st.iterations() * kNoiseGrid.n_steps() * kNoiseGrid.cells());
}

const Problem& ensemble_problem() {
    static const Problem p(InitialProfile::constant(1.0), SigmaFn::linear(1.0), Grid::make(2.5, 0.05, 0.25));
    return p;
}

void BM_EnsembleSerial(benchmark::State& st) {
    const auto& p = ensemble_problem();
    const std::int64_t mid = p.grid().half_cells();
    for (auto _ : st) {
        auto out = run_replicas_serial(st.range(0), [&](std::uint64_t r) { return p.run({3, r}).final_row[mid]; });
        benchmark::DoNotOptimize(out.values.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_EnsembleOpenMP(benchmark::State& st) {
    const auto& p = ensemble_problem();
    const std::int64_t mid = p.grid().half_cells();
    for (auto _ : st) {
        auto out = run_replicas(st.range(0), [&](std::uint64_t r) { return p.run({3, r}).final_row[mid]; });
        benchmark::DoNotOptimize(out.values.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_SampleNoiseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleNoiseOpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EnsembleOpenMP)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include "tilln/invariant.hpp"
#include "tilln/lln.hpp"
#include "tilln/models.hpp"
#include "tilln/splitting.hpp"

using namespace tilln;

namespace {

const Model& two_state() {
    static const Model m = builtin_model("two_state_sinusoid");
    return m;
}

SplitModel paper_split() {
    DoeblinCertificate cert;
    cert.beta = 0.25;
    cert.nu = ProbMeasure({0.5, 0.5});
    cert.R = two_state().drift.R;
    cert.window = {-10, 10};
    return SplitModel(two_state().family, cert, two_state().drift);
}

void BM_ComposeInterval(benchmark::State& state) {
    const auto len = state.range(0);
    for (auto _ : state) benchmark::DoNotOptimize(compose_interval(two_state().family, 0, len));
    state.SetItemsProcessed(state.iterations() * len);
}
BENCHMARK(BM_ComposeInterval)->Arg(10)->Arg(100)->Arg(1000);

void BM_SolveBackward(benchmark::State& state) {
    TimeIndex k = 0;
    for (auto _ : state) benchmark::DoNotOptimize(solve_backward(two_state().family, k++, 1e-12, 200));
}
BENCHMARK(BM_SolveBackward);

void BM_SimulateSplitChain(benchmark::State& state) {
    const auto model = paper_split();
    const auto steps = state.range(0);
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_split_chain(model, std::size_t{0}, 0, steps, seed++));
    state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_SimulateSplitChain)->Arg(1000)->Arg(100000);

void BM_CovarianceTable(benchmark::State& state) {
    const auto n = state.range(0);
    const auto family = solve_family(two_state().family, TimeWindow{0, n - 1}, 1e-12, 200);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            wlln_covariance_exact(two_state().family, family, Observable::identity(2.0), TimeWindow{0, n - 1}));
    }
}
BENCHMARK(BM_CovarianceTable)->Arg(200)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();

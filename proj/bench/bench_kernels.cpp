// Serial reference kernels against their OpenMP counterparts. Arg 0 is serial, 1 parallel.
#include "cstop/budget_dp.hpp"
#include "cstop/harness.hpp"
#include "cstop/martingale.hpp"
#include "cstop/monte_carlo.hpp"
#include "cstop/stopping_rules.hpp"
#include "cstop/tree.hpp"

#include <benchmark/benchmark.h>

using namespace cstop;

namespace {

Execution exec_of(const benchmark::State& state) { return state.range(0) ? Execution::Parallel : Execution::Serial; }

TreeInstance instance(int depth, int branches) {
    GenShape shape;
    shape.depth = depth;
    shape.branches = branches;
    return build_instance(generate_instance(11, shape));
}

RandomizedStoppingRule half_rule(const TreeInstance& t) {
    RandomizedStoppingRule r{std::vector<Rational>(t.size(), ratio(1, 2))};
    for (NodeId id : t.leaves()) r.q[id] = 1;
    return r;
}

void BM_MonteCarlo(benchmark::State& state) {
    const TreeInstance t = instance(6, 2);
    const RandomizedStoppingRule r = half_rule(t);
    for (auto _ : state) benchmark::DoNotOptimize(monte_carlo_value(t, r, 1 << 18, 7, exec_of(state)));
}

void BM_DpSolve(benchmark::State& state) {
    const TreeInstance t = instance(6, 3);
    for (auto _ : state) benchmark::DoNotOptimize(dp_solve(t, exec_of(state)));
}

void BM_Membership(benchmark::State& state) {
    const TreeInstance t = instance(4, 3);
    const Candidate c = candidate_from_rule(t, half_rule(t));
    MembershipOptions opt;
    opt.degree = 3;
    opt.exec = exec_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(check_membership(t, c, opt));
}

}  // namespace

BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_DpSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Membership)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();

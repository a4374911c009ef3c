#include "eden/sortition.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace eden::sortition;

static UnitRandom draw(std::mt19937_64& rng)
{
    uint256 v = 0;
    for (int i = 0; i < 4; ++i)
        v = (v << 64) | uint256(rng());
    return {v};
}

// Stake in units; K = 10^9, tau = 5000.
static void BM_ComputeVotes(benchmark::State& state)
{
    const SortitionParams params(5000, Ratio{3, 10}, 1'000'000'000);
    const auto stake = static_cast<std::uint64_t>(state.range(0));
    std::mt19937_64 rng(1);
    for (auto _ : state)
        benchmark::DoNotOptimize(compute_votes(draw(rng), stake, params));
}
BENCHMARK(BM_ComputeVotes)->Arg(1)->Arg(1'000)->Arg(1'000'000)->Arg(100'000'000);

static void BM_BinomialCdf(benchmark::State& state)
{
    const auto stake = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(binomial_cdf(10, stake, Ratio{5, 1'000'000}));
}
BENCHMARK(BM_BinomialCdf)->Arg(1'000'000)->Arg(100'000'000);

BENCHMARK_MAIN();

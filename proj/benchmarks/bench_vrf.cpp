#include "eden/vrf.hpp"

#include <benchmark/benchmark.h>

using namespace eden;

namespace {

vrf::KeyPair keys()
{
    vrf::Seed seed{};
    seed.fill(7);
    return vrf::keygen(seed);
}

vrf::MessageHash input(std::uint64_t i)
{
    vrf::MessageHash h;
    for (int b = 0; b < 8; ++b)
        h.digest[b] = static_cast<std::uint8_t>(i >> (8 * b));
    return h;
}

} // namespace

static void BM_ProverOutput(benchmark::State& state)
{
    const auto k = keys();
    std::uint64_t i = 0;
    for (auto _ : state) {
        vrf::Prover p(k, input(i++));
        benchmark::DoNotOptimize(p.output());
    }
}
BENCHMARK(BM_ProverOutput);

static void BM_Prove(benchmark::State& state)
{
    const auto k = keys();
    std::uint64_t i = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(vrf::evaluate(k, input(i++)));
}
BENCHMARK(BM_Prove);

static void BM_Verify(benchmark::State& state)
{
    const auto k = keys();
    const auto h = input(0);
    const auto out = vrf::evaluate(k, h);
    for (auto _ : state)
        benchmark::DoNotOptimize(vrf::verify(k.public_key, h, out));
}
BENCHMARK(BM_Verify);

BENCHMARK_MAIN();

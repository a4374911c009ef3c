#include "eden/fountain.hpp"

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

using namespace eden;

namespace {

// The bundled operating point: tau = 5000, theta = 0.3, a 276-byte canonical message.
fountain::CodecConfig config(fountain::CodecKind kind)
{
    const sortition::SortitionParams sp(5000, sortition::Ratio{3, 10}, 1'000'000'000);
    return fountain::CodecConfig::for_params(sp, 276, fountain::kDefaultOverhead, kind);
}

Bytes message(std::size_t n)
{
    std::mt19937_64 rng(3);
    Bytes m(n);
    for (auto& b : m)
        b = static_cast<std::uint8_t>(rng());
    return m;
}

} // namespace

static void BM_EncodeSubset(benchmark::State& state)
{
    const auto c = config(fountain::CodecKind::gf256);
    const auto m = message(276);
    std::vector<std::uint32_t> ids(static_cast<std::size_t>(state.range(0)));
    std::iota(ids.begin(), ids.end(), 0u);
    for (auto _ : state)
        benchmark::DoNotOptimize(fountain::encode_subset(m, c, ids));
}
BENCHMARK(BM_EncodeSubset)->Arg(5)->Arg(50);

static void BM_DecodeAtThreshold(benchmark::State& state)
{
    const auto kind = state.range(0) == 0 ? fountain::CodecKind::gf256 : fountain::CodecKind::lt;
    const auto c = config(kind);
    const auto m = message(276);
    std::vector<std::uint32_t> ids(c.tau);
    std::iota(ids.begin(), ids.end(), 0u);
    std::mt19937_64 rng(5);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(1500);
    const auto symbols = fountain::encode_subset(m, c, ids);
    for (auto _ : state)
        benchmark::DoNotOptimize(fountain::decode(symbols, c, m.size()));
}
BENCHMARK(BM_DecodeAtThreshold)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

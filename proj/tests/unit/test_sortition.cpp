#include "eden/error.hpp"
#include "eden/sortition.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

using namespace eden;
using namespace eden::sortition;

TEST_CASE("Ratio parsing is exact")
{
    CHECK(Ratio::parse("0.3") == Ratio{3, 10});
    CHECK(Ratio::parse("3/10") == Ratio{3, 10});
    CHECK(Ratio::parse("6/20") == Ratio{3, 10});
    CHECK(Ratio::parse(".25") == Ratio{1, 4});
    CHECK(Ratio::from_double(0.3) == Ratio{3, 10});
    CHECK_THROWS_AS(Ratio::parse("1/0"), DomainError);
    CHECK_THROWS_AS(Ratio::parse("abc"), DomainError);
    CHECK_THROWS_AS(Ratio::parse("-0.5"), DomainError);
}

TEST_CASE("SortitionParams validates and rounds the threshold up")
{
    SortitionParams p(5000, Ratio{3, 10}, 1'000'000'000);
    CHECK(p.vote_threshold() == 1500);
    CHECK(p.in_analysis_regime());
    CHECK(SortitionParams(100, Ratio{3, 10}, 10'000).vote_threshold() == 30);
    CHECK(SortitionParams(7, Ratio{1, 3}, 100).vote_threshold() == 3);

    CHECK_THROWS_AS(SortitionParams(0, Ratio{3, 10}, 100), DomainError);
    CHECK_THROWS_AS(SortitionParams(100, Ratio{3, 10}, 100), DomainError);
    CHECK_THROWS_AS(SortitionParams(10, Ratio{0, 1}, 100), DomainError);
    CHECK_THROWS_AS(SortitionParams(10, Ratio{1, 1}, 100), DomainError);
}

TEST_CASE("compute_votes boundary values")
{
    SortitionParams p(5000, Ratio{3, 10}, 1'000'000'000);
    CHECK(compute_votes(UnitRandom{0}, 1'000'000, p).votes == 0);
    CHECK(compute_votes(UnitRandom{0}, 1, p).votes == 0);
    // A single token votes iff x lands above (1 - p).
    CHECK(compute_votes(UnitRandom::max_below_one(), 1, p).votes == 1);
    CHECK_THROWS_AS(compute_votes(UnitRandom{0}, 0, p), DomainError);
}

TEST_CASE("compute_votes matches the exact-rational inverse CDF")
{
    std::mt19937_64 rng(7);
    for (auto [tau, K] : {std::pair<std::uint64_t, std::uint64_t>{10, 100}, {25, 100}, {50, 100}}) {
        SortitionParams p(tau, Ratio{3, 10}, K);
        for (std::uint64_t s : {1u, 2u, 5u, 13u, 30u}) {
            for (int i = 0; i < 300; ++i) {
                const auto x = testing::random_unit(rng);
                INFO("tau=" << tau << " s=" << s);
                REQUIRE(compute_votes(x, s, p).votes == testing::inverse_cdf_exact(x.value, s, tau, K));
            }
        }
    }
}

TEST_CASE("compute_votes is monotone in x")
{
    SortitionParams p(50, Ratio{3, 10}, 100);
    std::mt19937_64 rng(11);
    std::vector<UnitRandom> xs;
    for (int i = 0; i < 500; ++i)
        xs.push_back(testing::random_unit(rng));
    std::sort(xs.begin(), xs.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    std::uint64_t last = 0;
    for (const auto& x : xs) {
        const auto v = compute_votes(x, 20, p).votes;
        CHECK(v >= last);
        last = v;
    }
}

TEST_CASE("binomial_cdf agrees with an independent binomial CDF")
{
    for (std::uint64_t k : {0u, 1u, 3u, 7u, 20u}) {
        const double expected = testing::binomial_below(k + 1, 20, 0.25);
        const double got = binomial_cdf(k, 20, Ratio{1, 4}).convert_to<double>();
        CHECK(got == Catch::Approx(expected).epsilon(1e-12));
    }
    CHECK(binomial_cdf(20, 20, Ratio{1, 4}) == 1);
    CHECK_THROWS_AS(binomial_cdf(21, 20, Ratio{1, 4}), DomainError);
}

TEST_CASE("vote distribution passes a chi-square test against the exact pmf")
{
    const std::uint64_t s = 40;
    SortitionParams p(25, Ratio{3, 10}, 100);
    std::mt19937_64 rng(3);
    const int n = 20000;
    std::map<std::uint64_t, int> counts;
    for (int i = 0; i < n; ++i)
        ++counts[compute_votes(testing::random_unit(rng), s, p).votes];

    // Bins with expected count >= 5, tails pooled.
    double stat = 0;
    int bins = 0;
    double pooled_expected = 0, pooled_observed = 0;
    for (std::uint64_t k = 0; k <= s; ++k) {
        const double e = n * testing::binomial_pmf(k, s, 0.25);
        const double o = counts[k];
        if (e < 5) {
            pooled_expected += e;
            pooled_observed += o;
            continue;
        }
        stat += (o - e) * (o - e) / e;
        ++bins;
    }
    if (pooled_expected > 0) {
        stat += (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) / pooled_expected;
        ++bins;
    }
    CHECK(testing::chi_square_pvalue(stat, bins - 1) > 1e-4);
}

TEST_CASE("expected_votes is exact")
{
    SortitionParams p(5000, Ratio{3, 10}, 1'000'000'000);
    CHECK(expected_votes(1'000'000, p) == Rational(5));
    CHECK(expected_votes(1'000'000'000 - 1, p) == Rational(boost::multiprecision::cpp_int(999'999'999) * 5000, 1'000'000'000));
    CHECK(expected_votes(1, p) == Rational(1, 200'000));
}

TEST_CASE("UnitRandom byte round trip")
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        auto x = testing::random_unit(rng);
        CHECK(UnitRandom::from_bytes(x.to_bytes()) == x);
    }
    CHECK(UnitRandom{0}.to_double() == 0.0);
    CHECK(UnitRandom::max_below_one().to_double() < 1.0);
}

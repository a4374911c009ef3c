#pragma once

#include "eden/bytes.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace eden::sortition {

/// Binary floating point with a 128-bit significand, round-to-nearest-even.
using HighPrecision = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<128, boost::multiprecision::digit_base_2>,
    boost::multiprecision::et_off>;

using uint256 = boost::multiprecision::uint256_t;
using Rational = boost::multiprecision::cpp_rational;

/// Exact non-negative fraction num/den.
struct Ratio {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    /// Parses "0.3", "3/10" or "1" exactly. Throws DomainError on malformed input.
    static Ratio parse(std::string_view text);
    /// Exact ratio of the shortest decimal that round-trips `value`.
    static Ratio from_double(double value);

    double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    std::string to_string() const;

    /// Field-wise; compare reduced forms (parse always reduces).
    friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// (tau, theta, K) with p = tau/K kept as the exact integer pair.
class SortitionParams {
public:
    SortitionParams(std::uint64_t tau, Ratio theta, std::uint64_t total_supply);

    std::uint64_t tau() const noexcept { return tau_; }
    Ratio theta() const noexcept { return theta_; }
    std::uint64_t total_supply() const noexcept { return total_supply_; }

    /// ceil(theta * tau), computed in integers.
    std::uint64_t vote_threshold() const noexcept { return threshold_; }
    Ratio probability() const noexcept { return {tau_, total_supply_}; }
    double probability_approx() const noexcept { return probability().to_double(); }
    /// p < 0.001, the regime the normal-approximation analysis assumes. Informational only.
    bool in_analysis_regime() const noexcept { return tau_ * 1000 < total_supply_; }

private:
    std::uint64_t tau_;
    Ratio theta_;
    std::uint64_t total_supply_;
    std::uint64_t threshold_;
};

/// A 256-bit integer read as value / 2^256 in [0, 1).
struct UnitRandom {
    uint256 value;

    static UnitRandom from_bytes(const Digest& big_endian);
    Digest to_bytes() const;
    /// (2^256 - 1) / 2^256, the largest representable value below one.
    static UnitRandom max_below_one();
    double to_double() const;

    friend bool operator==(const UnitRandom&, const UnitRandom&) = default;
};

struct VoteWeight {
    std::uint64_t votes = 0;

    friend auto operator<=>(const VoteWeight&, const VoteWeight&) = default;
};

/// F(k; s, p) = sum_{j<=k} C(s,j) p^j (1-p)^(s-j).
///
/// Terms are generated by pmf(0) = (1-p)^s (exponentiation by squaring) and
/// pmf(j+1) = pmf(j) * (s-j)/(j+1) * p/(1-p), all in HighPrecision. Throws
/// DomainError when k > s, s == 0, or p is not strictly inside (0, 1).
HighPrecision binomial_cdf(std::uint64_t k, std::uint64_t stake, Ratio p);

/// Vote weight by inverse transform: 0 when x <= F(0), else min{k : F(k) >= x}, capped at
/// the stake. F is compared on the 2^-256 grid after rounding toward negative infinity, and
/// the walk stops once the accumulated CDF reaches 1 - 2^-128.
VoteWeight compute_votes(const UnitRandom& x, std::uint64_t stake, const SortitionParams& params);

/// s * tau / K, exact.
Rational expected_votes(std::uint64_t stake, const SortitionParams& params);

} // namespace eden::sortition

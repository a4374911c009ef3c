#include "eden/sortition.hpp"
#include "eden/error.hpp"

#include <charconv>
#include <limits>
#include <numeric>

namespace eden::sortition {

namespace {

using boost::multiprecision::ldexp;

constexpr std::uint64_t kMaxDecimalDen = 1'000'000'000'000'000'000ULL;

void check_probability(Ratio p)
{
    if (p.den == 0 || p.num == 0 || p.num >= p.den)
        throw DomainError("selection probability must lie strictly inside (0, 1)");
}

HighPrecision power(HighPrecision base, std::uint64_t exponent)
{
    HighPrecision result = 1;
    while (exponent != 0) {
        if (exponent & 1)
            result *= base;
        exponent >>= 1;
        if (exponent != 0)
            base *= base;
    }
    return result;
}

const HighPrecision& saturation()
{
    static const HighPrecision value = HighPrecision(1) - ldexp(HighPrecision(1), -128);
    return value;
}

/// floor(F * 2^256), saturating at 2^256 - 1.
uint256 to_fixed(const HighPrecision& cdf)
{
    if (cdf >= 1)
        return std::numeric_limits<uint256>::max();
    return static_cast<uint256>(ldexp(cdf, 256));
}

/// Walks pmf/cdf terms in the order shared by binomial_cdf and compute_votes.
class BinomialWalk {
public:
    BinomialWalk(std::uint64_t stake, Ratio p)
        : stake_(stake),
          odds_(HighPrecision(p.num) / HighPrecision(p.den - p.num)),
          pmf_(power(HighPrecision(p.den - p.num) / HighPrecision(p.den), stake)),
          cdf_(pmf_)
    {
    }

    std::uint64_t k() const noexcept { return k_; }
    const HighPrecision& pmf() const noexcept { return pmf_; }
    const HighPrecision& cdf() const noexcept { return cdf_; }
    bool at_end() const noexcept { return k_ == stake_; }

    void advance()
    {
        pmf_ *= HighPrecision(stake_ - k_);
        pmf_ /= HighPrecision(k_ + 1);
        pmf_ *= odds_;
        ++k_;
        cdf_ += pmf_;
    }

    /// Upper bound on the remaining tail once past the mode (geometric majorant).
    bool tail_negligible() const
    {
        if (at_end())
            return true;
        HighPrecision ratio = HighPrecision(stake_ - k_) / HighPrecision(k_ + 1) * odds_;
        if (ratio >= 1)
            return false;
        HighPrecision tail = pmf_ * ratio / (HighPrecision(1) - ratio);
        return tail < ldexp(cdf_, -130);
    }

private:
    std::uint64_t stake_;
    std::uint64_t k_ = 0;
    HighPrecision odds_;
    HighPrecision pmf_;
    HighPrecision cdf_;
};

} // namespace

Ratio Ratio::parse(std::string_view text)
{
    auto fail = [&] { return DomainError("not an exact fraction: '" + std::string(text) + "'"); };
    auto parse_u64 = [&](std::string_view digits) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
        if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size())
            throw fail();
        return v;
    };

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Ratio r{parse_u64(text.substr(0, slash)), parse_u64(text.substr(slash + 1))};
        if (r.den == 0)
            throw fail();
        auto g = std::gcd(r.num, r.den);
        return {r.num / g, r.den / g};
    }

    auto dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() && frac.empty())
        throw fail();
    std::uint64_t den = 1;
    std::uint64_t num = whole.empty() ? 0 : parse_u64(whole);
    for (char c : frac) {
        if (c < '0' || c > '9' || den >= kMaxDecimalDen || num > kMaxDecimalDen)
            throw fail();
        den *= 10;
        num = num * 10 + static_cast<std::uint64_t>(c - '0');
    }
    auto g = std::gcd(num, den);
    return {num / g, den / g};
}

Ratio Ratio::from_double(double value)
{
    if (!(value >= 0) || value > 1e6)
        throw DomainError("fraction out of range");
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
    if (ec != std::errc{})
        throw DomainError("fraction not representable");
    return parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string Ratio::to_string() const
{
    return std::to_string(num) + "/" + std::to_string(den);
}

SortitionParams::SortitionParams(std::uint64_t tau, Ratio theta, std::uint64_t total_supply)
    : tau_(tau), theta_(theta), total_supply_(total_supply), threshold_(0)
{
    if (tau == 0)
        throw DomainError("tau must be positive");
    if (total_supply <= tau)
        throw DomainError("selection probability tau/K must be below 1");
    if (theta.den == 0 || theta.num == 0 || theta.num >= theta.den)
        throw DomainError("theta must lie strictly inside (0, 1)");
    using boost::multiprecision::uint128_t;
    uint128_t scaled = uint128_t(theta.num) * tau;
    threshold_ = static_cast<std::uint64_t>((scaled + theta.den - 1) / theta.den);
}

UnitRandom UnitRandom::from_bytes(const Digest& big_endian)
{
    UnitRandom x;
    boost::multiprecision::import_bits(x.value, big_endian.begin(), big_endian.end(), 8, true);
    return x;
}

Digest UnitRandom::to_bytes() const
{
    Digest out{};
    uint256 v = value;
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        *it = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
    return out;
}

UnitRandom UnitRandom::max_below_one()
{
    return {std::numeric_limits<uint256>::max()};
}

double UnitRandom::to_double() const
{
    // 53 bits, so the maximum maps strictly below 1.
    return static_cast<double>(static_cast<std::uint64_t>(value >> 203)) / 9007199254740992.0;
}

HighPrecision binomial_cdf(std::uint64_t k, std::uint64_t stake, Ratio p)
{
    check_probability(p);
    if (stake == 0)
        throw DomainError("stake must be positive");
    if (k > stake)
        throw DomainError("k exceeds the stake");
    BinomialWalk walk(stake, p);
    while (walk.k() < k) {
        walk.advance();
        if (walk.k() < k && walk.tail_negligible())
            break;
    }
    return walk.cdf();
}

VoteWeight compute_votes(const UnitRandom& x, std::uint64_t stake, const SortitionParams& params)
{
    if (stake == 0)
        throw DomainError("stake must be positive");
    BinomialWalk walk(stake, params.probability());
    if (x.value <= to_fixed(walk.cdf()))
        return {0};
    while (!walk.at_end()) {
        walk.advance();
        if (x.value <= to_fixed(walk.cdf()) || walk.cdf() >= saturation())
            return {walk.k()};
    }
    return {stake};
}

Rational expected_votes(std::uint64_t stake, const SortitionParams& params)
{
    if (stake == 0)
        throw DomainError("stake must be positive");
    return Rational(boost::multiprecision::cpp_int(stake) * params.tau(), params.total_supply());
}

} // namespace eden::sortition

#pragma once

// Reference computations for tests. Nothing here calls into the code under test
// except plain value types.

#include "eden/sortition.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace eden::testing {

using boost::multiprecision::cpp_int;

/// min{k : F(k) >= X / 2^256} for Binomial(s, tau/K), with F evaluated exactly over the integers:
/// F(k) * K^s = sum_{j<=k} C(s, j) tau^j (K - tau)^(s - j).
inline std::uint64_t inverse_cdf_exact(const sortition::uint256& x, std::uint64_t s, std::uint64_t tau,
                                       std::uint64_t K)
{
    const cpp_int X(x);
    cpp_int denom = 1;
    for (std::uint64_t i = 0; i < s; ++i)
        denom *= K;
    const cpp_int scaled_x = X * denom;  // compare X * K^s <= 2^256 * F(k) * K^s
    cpp_int cdf_num = 0;
    cpp_int binom = 1;
    for (std::uint64_t k = 0; k <= s; ++k) {
        if (k > 0)
            binom = binom * (s - k + 1) / k;
        cpp_int term = binom;
        for (std::uint64_t j = 0; j < k; ++j)
            term *= tau;
        for (std::uint64_t j = 0; j < s - k; ++j)
            term *= (K - tau);
        cdf_num += term;
        if (scaled_x <= (cdf_num << 256))
            return k;
    }
    return s;
}

/// Pr(X < k) for X ~ Binomial(n, p).
inline double binomial_below(std::uint64_t k, std::uint64_t n, double p)
{
    if (k == 0)
        return 0.0;
    boost::math::binomial_distribution<double> d(static_cast<double>(n), p);
    return boost::math::cdf(d, static_cast<double>(k - 1));
}

inline double binomial_pmf(std::uint64_t k, std::uint64_t n, double p)
{
    boost::math::binomial_distribution<double> d(static_cast<double>(n), p);
    return boost::math::pdf(d, static_cast<double>(k));
}

/// Upper-tail p-value of a chi-square statistic.
inline double chi_square_pvalue(double statistic, double dof)
{
    boost::math::chi_squared_distribution<double> d(dof);
    return boost::math::cdf(boost::math::complement(d, statistic));
}

inline sortition::UnitRandom random_unit(std::mt19937_64& rng)
{
    sortition::uint256 v = 0;
    for (int i = 0; i < 4; ++i)
        v = (v << 64) | sortition::uint256(rng());
    return sortition::UnitRandom{v};
}

/// Directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("eden-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

} // namespace eden::testing

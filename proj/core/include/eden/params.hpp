#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>

namespace eden::params {

/// Quantile for a 1e-10 one-sided normal tail, as used by the security bounds.
inline constexpr double kTailQuantile = 6.36;

struct SecurityModel {
    double h = 0.75;      ///< honest share of staked tokens, in (2/3, 1]
    double alpha = 1.0;   ///< online share of the supply, in (0, 1]
    std::uint64_t tau = 5000;
    double theta = 0.3;
    /// Total supply. Absent means the p -> 0 limit; only the (1 - p) factors depend on it.
    std::optional<std::uint64_t> total_supply;

    /// Throws DomainError naming the offending field.
    void validate() const;
    double selection_probability() const noexcept;
    double honest_stake_draw() const noexcept { return h * alpha * static_cast<double>(tau); }
    double adversary_stake_draw() const noexcept { return (1.0 - h) * alpha * static_cast<double>(tau); }
};

/// Standard normal CDF; exactly 0 or 1 beyond |z| > 38.
double normal_cdf(double z) noexcept;

double theta_max_honest(const SecurityModel& model);
/// Same bound keeping the (1 - p) variance factor.
double theta_max_honest_full(const SecurityModel& model);
double theta_min_adversary(const SecurityModel& model);
/// Smallest tau with Pr(Y <= 0) <= 1e-10. Throws DomainError unless h > 2/3 and alpha in (0, 1].
std::uint64_t tau_min(double h, double alpha);

struct TailBoundReport {
    double mu_h = 0, sigma_h = 0;
    double mu_a = 0, sigma_a = 0;
    double mu_y = 0, sigma_y = 0;
    double p_honest_shortfall = 0;
    double p_adversary_reach = 0;
    double p_supermajority_fail = 0;
    /// S_h p > 5 and S_a p > 5. The adversary half is vacuous when h = 1.
    bool approximation_valid = false;
};

TailBoundReport tail_report(const SecurityModel& model);

struct Feasibility {
    bool feasible = false;
    double theta_max = 0;
    double theta_min = 0;
    std::uint64_t tau_min = 0;
    double honest_margin = 0;     ///< theta_max - theta
    double adversary_margin = 0;  ///< theta - theta_min
    std::int64_t tau_margin = 0;  ///< tau - tau_min
};

Feasibility feasibility(const SecurityModel& model);

void to_json(nlohmann::json& j, const SecurityModel& m);
void to_json(nlohmann::json& j, const TailBoundReport& r);
void to_json(nlohmann::json& j, const Feasibility& f);

} // namespace eden::params

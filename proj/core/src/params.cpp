#include "eden/params.hpp"
#include "eden/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>

namespace eden::params {

namespace {

constexpr double kTwoThirds = 2.0 / 3.0;

void check_fraction(double value, const char* name)
{
    if (!std::isfinite(value) || value <= 0.0 || value > 1.0)
        throw DomainError(std::string(name) + " must lie in (0, 1]");
}

// Pr(X < t) and Pr(X >= t) for X ~ N(mu, sigma^2); a degenerate sigma is a point mass.
double below(double t, double mu, double sigma)
{
    if (sigma <= 0.0)
        return mu < t ? 1.0 : 0.0;
    return normal_cdf((t - mu) / sigma);
}

} // namespace

void SecurityModel::validate() const
{
    if (!std::isfinite(h) || h <= kTwoThirds || h > 1.0)
        throw DomainError("h must lie in (2/3, 1]");
    check_fraction(alpha, "alpha");
    if (tau == 0)
        throw DomainError("tau must be positive");
    if (!std::isfinite(theta) || theta <= 0.0 || theta >= 1.0)
        throw DomainError("theta must lie in (0, 1)");
    if (total_supply && *total_supply < tau)
        throw DomainError("total supply must be at least tau");
}

double SecurityModel::selection_probability() const noexcept
{
    if (!total_supply)
        return 0.0;
    return static_cast<double>(tau) / static_cast<double>(*total_supply);
}

double normal_cdf(double z) noexcept
{
    if (std::isnan(z))
        return z;
    if (z < -38.0)
        return 0.0;
    if (z > 38.0)
        return 1.0;
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double theta_max_honest(const SecurityModel& model)
{
    model.validate();
    const double ha = model.h * model.alpha;
    return ha - kTailQuantile * std::sqrt(ha / static_cast<double>(model.tau));
}

double theta_max_honest_full(const SecurityModel& model)
{
    model.validate();
    const double ha = model.h * model.alpha;
    const double q = 1.0 - model.selection_probability();
    return ha - kTailQuantile * std::sqrt(ha * q / static_cast<double>(model.tau));
}

double theta_min_adversary(const SecurityModel& model)
{
    model.validate();
    const double ba = (1.0 - model.h) * model.alpha;
    return ba + kTailQuantile * std::sqrt(ba / static_cast<double>(model.tau));
}

std::uint64_t tau_min(double h, double alpha)
{
    if (!std::isfinite(h) || h <= kTwoThirds || h > 1.0)
        throw DomainError("h must lie in (2/3, 1]");
    check_fraction(alpha, "alpha");
    const double d = 3.0 * h - 2.0;
    const double bound = 40.5 * (4.0 - 3.0 * h) / (d * d * alpha);
    if (!(bound < 1e18))
        throw DomainError("tau_min overflows; h is too close to 2/3");
    // Representation error in h and alpha can push an exact integer just above itself.
    const double nearest = std::round(bound);
    if (std::abs(bound - nearest) <= 1e-9 * std::max(1.0, bound))
        return static_cast<std::uint64_t>(nearest);
    return static_cast<std::uint64_t>(std::ceil(bound));
}

TailBoundReport tail_report(const SecurityModel& model)
{
    model.validate();
    const double tau = static_cast<double>(model.tau);
    const double q = 1.0 - model.selection_probability();
    const double threshold = model.theta * tau;

    TailBoundReport r;
    r.mu_h = model.honest_stake_draw();
    r.sigma_h = std::sqrt(r.mu_h * q);
    r.mu_a = model.adversary_stake_draw();
    r.sigma_a = std::sqrt(r.mu_a * q);
    r.mu_y = (3.0 * model.h - 2.0) * model.alpha * tau;
    r.sigma_y = std::sqrt((4.0 - 3.0 * model.h) * model.alpha * tau);

    r.p_honest_shortfall = below(threshold, r.mu_h, r.sigma_h);
    r.p_adversary_reach = 1.0 - below(threshold, r.mu_a, r.sigma_a);
    r.p_supermajority_fail = normal_cdf(-r.mu_y / r.sigma_y);
    r.approximation_valid = r.mu_h > 5.0 && (model.h == 1.0 || r.mu_a > 5.0);
    return r;
}

Feasibility feasibility(const SecurityModel& model)
{
    Feasibility f;
    f.theta_max = theta_max_honest(model);
    f.theta_min = theta_min_adversary(model);
    f.tau_min = tau_min(model.h, model.alpha);
    f.honest_margin = f.theta_max - model.theta;
    f.adversary_margin = model.theta - f.theta_min;
    f.tau_margin = static_cast<std::int64_t>(model.tau) - static_cast<std::int64_t>(f.tau_min);
    f.feasible = f.honest_margin > 0.0 && f.adversary_margin > 0.0 && f.tau_margin >= 0;
    return f;
}

void to_json(nlohmann::json& j, const SecurityModel& m)
{
    j = {{"h", m.h}, {"alpha", m.alpha}, {"tau", m.tau}, {"theta", m.theta}};
    j["K"] = m.total_supply ? nlohmann::json(*m.total_supply) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const TailBoundReport& r)
{
    j = {{"mu_h", r.mu_h},
         {"sigma_h", r.sigma_h},
         {"mu_a", r.mu_a},
         {"sigma_a", r.sigma_a},
         {"mu_y", r.mu_y},
         {"sigma_y", r.sigma_y},
         {"p_honest_shortfall", r.p_honest_shortfall},
         {"p_adversary_reach", r.p_adversary_reach},
         {"p_supermajority_fail", r.p_supermajority_fail},
         {"approximation_valid", r.approximation_valid}};
}

void to_json(nlohmann::json& j, const Feasibility& f)
{
    j = {{"feasible", f.feasible},
         {"theta_max_honest", f.theta_max},
         {"theta_min_adversary", f.theta_min},
         {"tau_min", f.tau_min},
         {"honest_margin", f.honest_margin},
         {"adversary_margin", f.adversary_margin},
         {"tau_margin", f.tau_margin}};
}

} // namespace eden::params

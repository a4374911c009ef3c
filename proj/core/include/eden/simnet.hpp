#pragma once

#include "eden/envoy.hpp"
#include "eden/fountain.hpp"
#include "eden/params.hpp"
#include "eden/reducer.hpp"
#include "eden/sortition.hpp"
#include "eden/vrf.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace eden::simnet {

struct StakeDistribution {
    enum class Kind { uniform, zipf, explicit_list };
    Kind kind = Kind::uniform;
    double exponent = 1.0;               ///< zipf only
    std::vector<std::uint64_t> weights;  ///< explicit only

    /// "uniform", "zipf:1.0" or "explicit:5,3,2".
    static StakeDistribution parse(std::string_view text);
    std::string to_string() const;
};

struct LatencyModel {
    enum class Kind { fixed, uniform };
    Kind kind = Kind::fixed;
    std::uint64_t lo = 1;
    std::uint64_t hi = 1;

    /// "fixed:3" or "uniform:1,10" (inclusive bounds).
    static LatencyModel parse(std::string_view text);
    std::string to_string() const;
};

enum class AdversaryStrategy { none, forge, inflate, corrupt_symbols, replay };
std::string_view to_string(AdversaryStrategy s);
AdversaryStrategy parse_strategy(std::string_view text);

/// Flat key = value file; keys match the field names. '#' starts a comment and values may
/// be double-quoted. Unknown or repeated keys are errors.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::uint32_t n_envoys = 100;
    StakeDistribution stake_distribution;
    std::uint64_t K = 1'000'000'000;
    double h = 0.8;
    double alpha = 0.9;
    std::uint64_t tau = 5000;
    sortition::Ratio theta{3, 10};
    std::optional<std::uint32_t> source_k;  ///< derived from theta*tau and epsilon when absent
    double overhead_epsilon = fountain::kDefaultOverhead;
    std::optional<std::uint32_t> symbol_size;  ///< smallest that fits the largest message when absent
    fountain::CodecKind codec = fountain::CodecKind::gf256;
    std::uint32_t n_messages = 100;
    std::uint32_t payload_size = 256;
    AdversaryStrategy adversary_strategy = AdversaryStrategy::none;
    LatencyModel latency;
    std::uint64_t message_deadline = 50;  ///< ticks after a message is observed
    std::uint64_t message_interval = 1;   ///< ticks between successive messages
    double expect_commit_rate = 1.0;
    unsigned threads = 0;                 ///< 0: hardware concurrency. Never affects results.
    std::string message_feed;             ///< JSON-lines feed replacing generated messages

    static ScenarioConfig parse(std::istream& in);
    static ScenarioConfig load(const std::string& path);
    /// Round-trips through parse().
    std::string to_text() const;
    nlohmann::json to_json() const;

    sortition::SortitionParams sortition_params() const;
    params::SecurityModel security_model() const;
    /// Codec geometry for messages whose canonical encoding is at most `max_message_size`.
    fountain::CodecConfig codec_config(std::size_t max_message_size) const;
};

enum class Role { honest, adversary, offline };
std::string_view to_string(Role r);

struct Envoy {
    envoy::EnvoyRecord record;
    vrf::KeyPair keys;
    Role role = Role::honest;
};

struct Universe {
    reducer::StakeRegistry registry;
    std::vector<Envoy> envoys;  ///< ordered by envoy_id

    std::uint64_t stake_of(Role r) const;
    std::size_t count_of(Role r) const;
};

/// Stakes normalized to K by largest remainder, keys derived from the seed, then a seeded
/// first-fit partition: adversaries up to (1-h)*alpha*K, offline up to (1-alpha)*K.
/// Throws ConfigError when a nonzero target cannot be met by any envoy.
Universe build_universe(const ScenarioConfig& config);

/// Generated or feed-supplied messages, in order.
std::vector<envoy::CrossChainMessage> scenario_messages(const ScenarioConfig& config);

struct PacketCounts {
    std::uint64_t sent = 0;
    std::uint64_t accepted = 0;
    std::map<std::string, std::uint64_t> rejected;  ///< by reason

    std::uint64_t rejected_total() const;
};

struct MessageOutcome {
    std::uint32_t index = 0;
    vrf::MessageHash message_hash;
    reducer::FinalStatus status = reducer::FinalStatus::pending;
    std::uint64_t final_votes = 0;
    std::uint64_t votes_at_commit = 0;
    std::optional<std::uint64_t> commit_tick;
    std::uint64_t start_tick = 0;
    std::uint64_t bytes_transmitted = 0;
    std::uint64_t symbol_bytes = 0;
    std::uint64_t naive_bytes = 0;
    std::uint64_t symbols_received = 0;
    std::uint64_t distinct_symbols = 0;
};

struct SimReport {
    std::vector<MessageOutcome> messages;
    std::vector<std::string> events;  ///< one JSON line per finalized message state
    std::map<std::string, PacketCounts> packets;  ///< by packet origin
    std::uint64_t forged_commits = 0;
    std::uint64_t forged_max_votes = 0;
    double honest_commit_rate = 0;
    std::optional<double> mean_commit_latency;
    double vote_sum_mean = 0;
    double vote_sum_variance = 0;
    double duplicate_symbol_ratio = 0;
    std::uint64_t bytes_transmitted = 0;
    std::uint64_t naive_baseline_bytes = 0;

    nlohmann::json to_json(const ScenarioConfig& config, const Universe& universe) const;
    /// One row per message.
    std::string to_csv() const;
};

/// Deterministic: the report depends only on the config, never on thread count or timing.
SimReport run(const ScenarioConfig& config);
SimReport run(const ScenarioConfig& config, const Universe& universe);

struct CohortStats {
    double mean = 0;
    double variance = 0;
};

struct VoteSumSummary {
    std::uint64_t n_trials = 0;
    CohortStats honest, adversary, supermajority;
    params::TailBoundReport analytic;
    std::uint64_t honest_stake = 0;
    std::uint64_t adversary_stake = 0;
    std::uint64_t honest_shortfalls = 0;  ///< X_h < ceil(theta*tau)
    std::uint64_t adversary_reaches = 0;  ///< X_a >= ceil(theta*tau)
    std::uint64_t supermajority_fails = 0; ///< Y <= 0
    /// The normal approximation needs S_h p > 5 and S_a p > 5.
    bool approximation_valid = false;

    nlohmann::json to_json() const;
};

/// Per-trial vote totals of the online honest and adversarial cohorts, from VRF outputs only.
VoteSumSummary vote_sum_experiment(const ScenarioConfig& config, std::uint64_t n_trials);
VoteSumSummary vote_sum_experiment(const ScenarioConfig& config, const Universe& universe, std::uint64_t n_trials);

} // namespace eden::simnet

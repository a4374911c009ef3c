#pragma once

#include "eden/envoy.hpp"
#include "eden/fountain.hpp"
#include "eden/sortition.hpp"
#include "eden/vrf.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace eden::reducer {

/// envoy_id -> (public key, stake), with the cached stake total bounded by K.
class StakeRegistry {
public:
    explicit StakeRegistry(std::uint64_t total_supply);

    /// Throws ConfigError on a duplicate id, zero stake, or a total above K.
    void add(envoy::EnvoyRecord record);
    const envoy::EnvoyRecord* find(std::uint32_t envoy_id) const;

    std::uint64_t total_staked() const noexcept { return total_staked_; }
    std::uint64_t total_supply() const noexcept { return total_supply_; }
    std::size_t size() const noexcept { return records_.size(); }
    const std::map<std::uint32_t, envoy::EnvoyRecord>& records() const noexcept { return records_; }

    /// {"total_supply": K, "envoys": [{"envoy_id", "public_key" (hex), "stake"}]}. Stakes must be
    /// JSON integers; fractional or quoted stakes are rejected.
    static StakeRegistry load(std::istream& in);
    void save(std::ostream& out) const;

private:
    std::uint64_t total_supply_;
    std::uint64_t total_staked_ = 0;
    std::map<std::uint32_t, envoy::EnvoyRecord> records_;
};

enum class Status { pending, committed, rejected };
enum class FinalStatus { pending, committed, timed_out, rejected };
enum class RejectReason { unknown_envoy, duplicate, proof, votes, symbols, malformed, closed };
enum class RejectionCause { hash_mismatch, conflicting_commit };

std::string_view to_string(Status s);
std::string_view to_string(FinalStatus s);
std::string_view to_string(RejectReason r);
std::string_view to_string(RejectionCause c);

struct CommittedMessage {
    vrf::MessageHash message_hash;
    envoy::CrossChainMessage message;
    std::uint64_t final_votes = 0;
    std::uint64_t commit_tick = 0;
};

struct Accepted {
    std::uint64_t verified_votes = 0;
};
struct Rejected {
    RejectReason reason;
};
struct Committed {
    CommittedMessage commit;
};
/// The packet verified, but the message it completed was marked rejected.
struct MessageRejected {
    RejectionCause cause;
};

using Event = std::variant<Accepted, Rejected, Committed, MessageRejected>;

/// Individual checks can be switched off to show that each one is load-bearing.
struct VerificationPolicy {
    bool check_duplicates = true;
    bool check_proof = true;
    bool check_votes = true;
    bool check_symbols = true;
};

struct Equivocation {
    std::uint32_t source_chain_id = 0;
    std::uint64_t sequence_number = 0;
    std::optional<vrf::MessageHash> winner;
    vrf::MessageHash loser;
    RejectionCause cause;
};

/// First hash to commit for a (source_chain_id, sequence_number) wins.
class CommitLedger {
public:
    std::optional<vrf::MessageHash> winner(std::uint32_t chain, std::uint64_t sequence) const;
    void record_commit(std::uint32_t chain, std::uint64_t sequence, const vrf::MessageHash& hash);
    void record_equivocation(Equivocation e) { equivocations_.push_back(std::move(e)); }
    const std::vector<Equivocation>& equivocations() const noexcept { return equivocations_; }

private:
    std::map<std::pair<std::uint32_t, std::uint64_t>, vrf::MessageHash> winners_;
    std::vector<Equivocation> equivocations_;
};

struct ReducerContext {
    const StakeRegistry& registry;
    const sortition::SortitionParams& params;
    const fountain::CodecConfig& codec;
    VerificationPolicy policy{};
    CommitLedger* ledger = nullptr;
};

/// Per-message accumulation. Single writer.
class ReducerState {
public:
    explicit ReducerState(const vrf::MessageHash& hash);
    ~ReducerState();
    ReducerState(ReducerState&&) noexcept;
    ReducerState& operator=(ReducerState&&) noexcept;

    const vrf::MessageHash& message_hash() const noexcept { return hash_; }
    Status status() const noexcept { return status_; }
    /// Sum of claimed votes over accepted packets, including ones that arrive after the commit.
    std::uint64_t verified_votes() const noexcept { return verified_votes_; }
    std::uint64_t votes_at_commit() const noexcept { return votes_at_commit_; }
    const std::set<std::uint32_t>& seen_envoys() const noexcept { return seen_envoys_; }
    const std::map<std::uint32_t, fountain::EncodedSymbol>& symbol_pool() const noexcept { return pool_; }
    std::uint64_t symbols_received() const noexcept { return symbols_received_; }
    const std::optional<CommittedMessage>& committed() const noexcept { return committed_; }
    std::optional<RejectionCause> rejection_cause() const noexcept { return rejection_cause_; }

    /// Drops decoder memory; only meaningful once the message is no longer pending.
    void release_decoder() noexcept;

private:
    friend Event handle_packet(ReducerState&, const envoy::VotePacket&, const ReducerContext&, std::uint64_t);

    vrf::MessageHash hash_;
    Status status_ = Status::pending;
    std::uint64_t verified_votes_ = 0;
    std::uint64_t votes_at_commit_ = 0;
    std::uint64_t symbols_received_ = 0;
    std::set<std::uint32_t> seen_envoys_;
    std::map<std::uint32_t, fountain::EncodedSymbol> pool_;
    std::unique_ptr<fountain::Decoder> decoder_;
    std::optional<CommittedMessage> committed_;
    std::optional<RejectionCause> rejection_cause_;
};

/// Verify (registry, duplicate, VRF proof, vote recomputation, symbol set), then accumulate
/// and try to commit once verified votes reach ceil(theta*tau). Rejections mutate nothing.
/// Packets for an already committed message are still verified and counted toward
/// verified_votes, but their symbols are not merged.
Event handle_packet(ReducerState& state, const envoy::VotePacket& packet, const ReducerContext& ctx,
                    std::uint64_t tick = 0);

/// committed / rejected as recorded; otherwise timed_out once now >= deadline, else pending.
FinalStatus finalize_status(const ReducerState& state, std::uint64_t deadline, std::uint64_t now);

/// {"message_hash_hex", "status", "final_votes", "commit_tick"} as one JSON line (no newline).
std::string event_record(const ReducerState& state, FinalStatus status);

/// Routes packets to per-hash states and owns the commit ledger.
class Reducer {
public:
    Reducer(const StakeRegistry& registry, const sortition::SortitionParams& params,
            const fountain::CodecConfig& codec, VerificationPolicy policy = {});

    Event submit(const envoy::VotePacket& packet, std::uint64_t tick);
    const ReducerState* state(const vrf::MessageHash& hash) const;
    FinalStatus finalize(const vrf::MessageHash& hash, std::uint64_t deadline, std::uint64_t now);
    const CommitLedger& ledger() const noexcept { return ledger_; }

private:
    const StakeRegistry& registry_;
    sortition::SortitionParams params_;
    fountain::CodecConfig codec_;
    VerificationPolicy policy_;
    CommitLedger ledger_;
    std::map<vrf::MessageHash, ReducerState> states_;
};

} // namespace eden::reducer

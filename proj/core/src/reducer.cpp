#include "eden/reducer.hpp"
#include "eden/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <ostream>

namespace eden::reducer {

StakeRegistry::StakeRegistry(std::uint64_t total_supply) : total_supply_(total_supply)
{
    if (total_supply == 0)
        throw ConfigError("must be positive", "total_supply");
}

void StakeRegistry::add(envoy::EnvoyRecord record)
{
    if (record.stake == 0)
        throw ConfigError("envoy " + std::to_string(record.envoy_id) + " has zero stake", "stake");
    if (records_.count(record.envoy_id) != 0)
        throw ConfigError("duplicate envoy id " + std::to_string(record.envoy_id), "envoy_id");
    if (record.stake > total_supply_ - total_staked_)
        throw ConfigError("total stake exceeds the token supply", "stake");
    total_staked_ += record.stake;
    const auto id = record.envoy_id;
    records_.emplace(id, std::move(record));
}

const envoy::EnvoyRecord* StakeRegistry::find(std::uint32_t envoy_id) const
{
    auto it = records_.find(envoy_id);
    return it == records_.end() ? nullptr : &it->second;
}

StakeRegistry StakeRegistry::load(std::istream& in)
{
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("registry is not valid JSON: ") + e.what());
    }
    auto integer = [](const nlohmann::json& v, const char* key) -> std::uint64_t {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ConfigError("must be a non-negative integer (token units)", key);
        return v.get<std::uint64_t>();
    };
    if (!doc.is_object() || !doc.contains("total_supply") || !doc.contains("envoys") || !doc["envoys"].is_array())
        throw ConfigError("registry needs total_supply and an envoys array");
    StakeRegistry registry(integer(doc["total_supply"], "total_supply"));
    for (const auto& e : doc["envoys"]) {
        if (!e.is_object() || !e.contains("envoy_id") || !e.contains("public_key") || !e.contains("stake"))
            throw ConfigError("each envoy needs envoy_id, public_key and stake");
        if (!e["public_key"].is_string())
            throw ConfigError("must be a hex string", "public_key");
        envoy::EnvoyRecord record;
        auto id = integer(e["envoy_id"], "envoy_id");
        if (id > UINT32_MAX)
            throw ConfigError("exceeds 32 bits", "envoy_id");
        record.envoy_id = static_cast<std::uint32_t>(id);
        record.stake = integer(e["stake"], "stake");
        try {
            record.public_key = from_hex(e["public_key"].get<std::string>());
        } catch (const FormatError& err) {
            throw ConfigError(err.what(), "public_key");
        }
        registry.add(std::move(record));
    }
    return registry;
}

void StakeRegistry::save(std::ostream& out) const
{
    nlohmann::json doc;
    doc["total_supply"] = total_supply_;
    doc["envoys"] = nlohmann::json::array();
    for (const auto& [id, r] : records_)
        doc["envoys"].push_back({{"envoy_id", id}, {"public_key", to_hex(r.public_key)}, {"stake", r.stake}});
    out << doc.dump(2) << '\n';
}

std::string_view to_string(Status s)
{
    switch (s) {
    case Status::pending: return "pending";
    case Status::committed: return "committed";
    case Status::rejected: return "rejected";
    }
    return "?";
}

std::string_view to_string(FinalStatus s)
{
    switch (s) {
    case FinalStatus::pending: return "pending";
    case FinalStatus::committed: return "committed";
    case FinalStatus::timed_out: return "timed-out";
    case FinalStatus::rejected: return "rejected";
    }
    return "?";
}

std::string_view to_string(RejectReason r)
{
    switch (r) {
    case RejectReason::unknown_envoy: return "unknown-envoy";
    case RejectReason::duplicate: return "duplicate";
    case RejectReason::proof: return "proof";
    case RejectReason::votes: return "votes";
    case RejectReason::symbols: return "symbols";
    case RejectReason::malformed: return "malformed";
    case RejectReason::closed: return "closed";
    }
    return "?";
}

std::string_view to_string(RejectionCause c)
{
    return c == RejectionCause::hash_mismatch ? "hash-mismatch" : "conflicting-commit";
}

std::optional<vrf::MessageHash> CommitLedger::winner(std::uint32_t chain, std::uint64_t sequence) const
{
    auto it = winners_.find({chain, sequence});
    if (it == winners_.end())
        return std::nullopt;
    return it->second;
}

void CommitLedger::record_commit(std::uint32_t chain, std::uint64_t sequence, const vrf::MessageHash& hash)
{
    winners_.emplace(std::make_pair(chain, sequence), hash);
}

ReducerState::ReducerState(const vrf::MessageHash& hash) : hash_(hash) {}
ReducerState::~ReducerState() = default;
ReducerState::ReducerState(ReducerState&&) noexcept = default;
ReducerState& ReducerState::operator=(ReducerState&&) noexcept = default;

void ReducerState::release_decoder() noexcept
{
    if (status_ != Status::pending)
        decoder_.reset();
}

namespace {

std::optional<RejectReason> verify_packet(const ReducerState& state, const envoy::VotePacket& packet,
                                          const ReducerContext& ctx, const envoy::EnvoyRecord*& record,
                                          sortition::VoteWeight& recomputed)
{
    record = ctx.registry.find(packet.envoy_id);
    if (record == nullptr)
        return RejectReason::unknown_envoy;
    if (packet.message_hash != state.message_hash())
        return RejectReason::malformed;
    if (ctx.policy.check_duplicates && state.seen_envoys().count(packet.envoy_id) != 0)
        return RejectReason::duplicate;
    if (packet.claimed_votes.votes == 0)
        return RejectReason::votes;
    for (const auto& s : packet.symbols)
        if (s.payload.size() != ctx.codec.symbol_size || s.symbol_id >= ctx.codec.tau)
            return RejectReason::malformed;

    if (ctx.policy.check_proof
        && !vrf::verify(record->public_key, packet.message_hash, {packet.vrf_random, packet.vrf_proof}))
        return RejectReason::proof;

    recomputed = sortition::compute_votes(packet.vrf_random, record->stake, ctx.params);
    if (ctx.policy.check_votes && recomputed != packet.claimed_votes)
        return RejectReason::votes;

    if (ctx.policy.check_symbols) {
        const auto count = std::min<std::uint64_t>(recomputed.votes, ctx.codec.tau);
        const auto expected = fountain::select_symbols(packet.vrf_random, count, ctx.codec.tau);
        if (expected.size() != packet.symbols.size())
            return RejectReason::symbols;
        for (std::size_t i = 0; i < expected.size(); ++i)
            if (expected[i] != packet.symbols[i].symbol_id)
                return RejectReason::symbols;
    }
    return std::nullopt;
}

} // namespace

Event handle_packet(ReducerState& state, const envoy::VotePacket& packet, const ReducerContext& ctx,
                    std::uint64_t tick)
{
    if (state.status_ == Status::rejected)
        return Rejected{RejectReason::closed};

    const envoy::EnvoyRecord* record = nullptr;
    sortition::VoteWeight recomputed;
    if (auto reason = verify_packet(state, packet, ctx, record, recomputed))
        return Rejected{*reason};

    state.seen_envoys_.insert(packet.envoy_id);
    state.verified_votes_ += packet.claimed_votes.votes;
    state.symbols_received_ += packet.symbols.size();

    if (state.status_ == Status::committed) {
        state.committed_->final_votes = state.verified_votes_;
        return Accepted{state.verified_votes_};
    }

    if (!state.decoder_)
        state.decoder_ = std::make_unique<fountain::Decoder>(ctx.codec);
    for (const auto& s : packet.symbols) {
        if (state.pool_.count(s.symbol_id) != 0)
            continue;
        state.pool_.emplace(s.symbol_id, s);
        state.decoder_->add(s);
    }

    if (state.verified_votes_ < ctx.params.vote_threshold() || !state.decoder_->complete())
        return Accepted{state.verified_votes_};

    auto reject = [&](RejectionCause cause, std::optional<envoy::CrossChainMessage> decoded) -> Event {
        state.status_ = Status::rejected;
        state.rejection_cause_ = cause;
        state.decoder_.reset();
        if (ctx.ledger != nullptr && decoded) {
            ctx.ledger->record_equivocation({decoded->source_chain_id, decoded->sequence_number,
                                             ctx.ledger->winner(decoded->source_chain_id, decoded->sequence_number),
                                             state.hash_, cause});
        }
        return MessageRejected{cause};
    };

    Bytes block = *state.decoder_->solve();
    auto length = envoy::canonical_length(block);
    if (!length || *length > block.size())
        return reject(RejectionCause::hash_mismatch, std::nullopt);
    block.resize(*length);
    if (sha256(block) != state.hash_.digest) {
        std::optional<envoy::CrossChainMessage> decoded;
        try {
            decoded = envoy::canonical_decode(block);
        } catch (const FormatError&) {
        }
        return reject(RejectionCause::hash_mismatch, decoded);
    }

    auto message = envoy::canonical_decode(block);
    if (ctx.ledger != nullptr) {
        auto winner = ctx.ledger->winner(message.source_chain_id, message.sequence_number);
        if (winner && *winner != state.hash_)
            return reject(RejectionCause::conflicting_commit, message);
        ctx.ledger->record_commit(message.source_chain_id, message.sequence_number, state.hash_);
    }

    state.status_ = Status::committed;
    state.votes_at_commit_ = state.verified_votes_;
    state.committed_ = CommittedMessage{state.hash_, std::move(message), state.verified_votes_, tick};
    state.decoder_.reset();
    return Committed{*state.committed_};
}

FinalStatus finalize_status(const ReducerState& state, std::uint64_t deadline, std::uint64_t now)
{
    switch (state.status()) {
    case Status::committed: return FinalStatus::committed;
    case Status::rejected: return FinalStatus::rejected;
    case Status::pending: break;
    }
    return now >= deadline ? FinalStatus::timed_out : FinalStatus::pending;
}

std::string event_record(const ReducerState& state, FinalStatus status)
{
    nlohmann::json j;
    j["message_hash_hex"] = to_hex(state.message_hash().digest);
    j["status"] = to_string(status);
    j["final_votes"] = state.verified_votes();
    if (state.committed())
        j["commit_tick"] = state.committed()->commit_tick;
    else
        j["commit_tick"] = nullptr;
    return j.dump();
}

Reducer::Reducer(const StakeRegistry& registry, const sortition::SortitionParams& params,
                 const fountain::CodecConfig& codec, VerificationPolicy policy)
    : registry_(registry), params_(params), codec_(codec), policy_(policy)
{
    codec_.validate(params_.vote_threshold());
}

Event Reducer::submit(const envoy::VotePacket& packet, std::uint64_t tick)
{
    auto it = states_.find(packet.message_hash);
    if (it == states_.end())
        it = states_.emplace(packet.message_hash, ReducerState(packet.message_hash)).first;
    ReducerContext ctx{registry_, params_, codec_, policy_, &ledger_};
    return handle_packet(it->second, packet, ctx, tick);
}

const ReducerState* Reducer::state(const vrf::MessageHash& hash) const
{
    auto it = states_.find(hash);
    return it == states_.end() ? nullptr : &it->second;
}

FinalStatus Reducer::finalize(const vrf::MessageHash& hash, std::uint64_t deadline, std::uint64_t now)
{
    auto it = states_.find(hash);
    if (it == states_.end())
        return now >= deadline ? FinalStatus::timed_out : FinalStatus::pending;
    auto status = finalize_status(it->second, deadline, now);
    if (status == FinalStatus::timed_out)
        it->second.release_decoder();
    return status;
}

} // namespace eden::reducer

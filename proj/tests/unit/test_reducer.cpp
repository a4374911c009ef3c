#include "eden/error.hpp"
#include "eden/reducer.hpp"

#include "reducer_world.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <random>
#include <sstream>

using namespace eden;
using namespace eden::reducer;

namespace {

using testing::make_message;
using World = testing::ReducerWorld;

template <typename T>
bool holds(const Event& e)
{
    return std::holds_alternative<T>(e);
}

std::optional<RejectReason> reason(const Event& e)
{
    if (auto r = std::get_if<Rejected>(&e))
        return r->reason;
    return std::nullopt;
}

} // namespace

TEST_CASE("honest packets commit the message")
{
    World w;
    const auto msg = make_message(1);
    ReducerState state(envoy::message_hash(msg));
    auto ctx = w.context();
    std::optional<CommittedMessage> commit;
    for (const auto& p : w.packets(msg)) {
        auto e = handle_packet(state, p, ctx, 3);
        REQUIRE_FALSE(holds<Rejected>(e));
        if (auto c = std::get_if<Committed>(&e))
            commit = c->commit;
    }
    REQUIRE(commit);
    CHECK(commit->message == msg);
    CHECK(commit->final_votes >= w.params.vote_threshold());
    CHECK(commit->commit_tick == 3);
    CHECK(state.status() == Status::committed);
    CHECK(state.committed()->final_votes == state.verified_votes());
    CHECK(finalize_status(state, 10, 10) == FinalStatus::committed);
}

TEST_CASE("order independence over 100 shuffles")
{
    World w;
    const auto msg = make_message(2);
    auto packets = w.packets(msg);
    // Mix in packets that must be rejected wherever they land.
    auto inflated = packets.front();
    inflated.claimed_votes.votes += 1;
    packets.push_back(inflated);
    packets.push_back(packets[1]);

    std::mt19937_64 rng(99);
    std::optional<std::uint64_t> votes;
    for (int round = 0; round < 100; ++round) {
        std::shuffle(packets.begin(), packets.end(), rng);
        ReducerState state(envoy::message_hash(msg));
        auto ctx = w.context();
        for (const auto& p : packets)
            handle_packet(state, p, ctx);
        REQUIRE(state.status() == Status::committed);
        REQUIRE(state.committed()->message == msg);
        if (!votes)
            votes = state.verified_votes();
        REQUIRE(state.verified_votes() == *votes);
    }
}

TEST_CASE("duplicate rejection is idempotent and mutates nothing")
{
    World w;
    const auto msg = make_message(3);
    const auto packets = w.packets(msg);
    REQUIRE_FALSE(packets.empty());
    ReducerState state(envoy::message_hash(msg));
    auto ctx = w.context();
    const auto first = handle_packet(state, packets[0], ctx);
    CHECK((holds<Accepted>(first) || holds<Committed>(first)));
    const auto votes = state.verified_votes();
    const auto pool = state.symbol_pool();
    const auto received = state.symbols_received();
    for (int i = 0; i < 5; ++i) {
        CHECK(reason(handle_packet(state, packets[0], ctx)) == RejectReason::duplicate);
        CHECK(state.verified_votes() == votes);
        CHECK(state.symbol_pool() == pool);
        CHECK(state.symbols_received() == received);
    }
}

TEST_CASE("each verification step is load-bearing")
{
    World w;
    const auto msg = make_message(4);
    const auto hash = envoy::message_hash(msg);
    const auto honest = w.packets(msg);
    REQUIRE(honest.size() >= 2);
    const auto& base = honest[0];

    for (const auto& c : testing::forgeries(w, msg, base)) {
        INFO(c.name);
        for (bool enabled : {true, false}) {
            VerificationPolicy policy;
            policy.*(c.check) = enabled;
            ReducerState state(hash);
            auto ctx = w.context(policy);
            if (c.needs_original)
                REQUIRE(holds<Accepted>(handle_packet(state, base, ctx)));
            const auto votes_before = state.verified_votes();
            const auto e = handle_packet(state, c.packet, ctx);
            if (enabled) {
                CHECK(reason(e) == c.expected);
                CHECK(state.verified_votes() == votes_before);
            } else {
                // No other step notices the forgery.
                CHECK_FALSE(holds<Rejected>(e));
                CHECK(state.verified_votes() > votes_before);
            }
        }
    }
}

TEST_CASE("unknown envoys and mismatched hashes are rejected")
{
    World w;
    const auto msg = make_message(5);
    auto p = w.packets(msg).front();
    ReducerState state(envoy::message_hash(msg));
    auto ctx = w.context();

    auto stranger = p;
    stranger.envoy_id = 77;
    CHECK(reason(handle_packet(state, stranger, ctx)) == RejectReason::unknown_envoy);

    ReducerState other(envoy::message_hash(make_message(6)));
    CHECK(reason(handle_packet(other, p, ctx)) == RejectReason::malformed);

    auto zero = p;
    zero.claimed_votes.votes = 0;
    zero.symbols.clear();
    CHECK(reason(handle_packet(state, zero, ctx)) == RejectReason::votes);
    CHECK(state.verified_votes() == 0);
}

TEST_CASE("a decoded body that does not hash to the message is rejected")
{
    World w;
    const auto msg = make_message(7);
    const auto hash = envoy::message_hash(msg);
    const auto wrong_body = envoy::canonical_encode(make_message(7, 0x22));
    ReducerState state(hash);
    CommitLedger ledger;
    auto ctx = w.context({}, &ledger);

    std::optional<RejectionCause> cause;
    for (std::uint32_t i = 0; i < 10 && !cause; ++i) {
        auto p = w.packet_over(i, wrong_body, hash);
        if (p.claimed_votes.votes == 0)
            continue;
        auto e = handle_packet(state, p, ctx);
        REQUIRE_FALSE(holds<Committed>(e));
        if (auto m = std::get_if<MessageRejected>(&e))
            cause = m->cause;
    }
    REQUIRE(cause == RejectionCause::hash_mismatch);
    CHECK(state.status() == Status::rejected);
    CHECK(finalize_status(state, 0, 100) == FinalStatus::rejected);
    CHECK(ledger.equivocations().size() == 1);
    CHECK(reason(handle_packet(state, w.packets(msg).front(), ctx)) == RejectReason::closed);
}

TEST_CASE("the first commit for a (chain, sequence) wins")
{
    World w;
    const auto first = make_message(8, 0x01);
    const auto second = make_message(8, 0x02);
    Reducer reducer(w.registry, w.params, w.codec);
    for (const auto& p : w.packets(first))
        reducer.submit(p, 1);
    REQUIRE(reducer.state(envoy::message_hash(first))->status() == Status::committed);

    std::optional<RejectionCause> cause;
    for (const auto& p : w.packets(second)) {
        const auto e = reducer.submit(p, 2);
        if (auto m = std::get_if<MessageRejected>(&e))
            cause = m->cause;
    }
    CHECK(cause == RejectionCause::conflicting_commit);
    CHECK(reducer.state(envoy::message_hash(second))->status() == Status::rejected);
    CHECK(reducer.state(envoy::message_hash(second))->rejection_cause() == RejectionCause::conflicting_commit);
    REQUIRE(reducer.ledger().equivocations().size() == 1);
    CHECK(reducer.ledger().equivocations()[0].winner == envoy::message_hash(first));
}

TEST_CASE("finalize_status and event records")
{
    World w;
    ReducerState empty(envoy::message_hash(make_message(9)));
    CHECK(finalize_status(empty, 10, 5) == FinalStatus::pending);
    CHECK(finalize_status(empty, 10, 10) == FinalStatus::timed_out);
    const auto j = nlohmann::json::parse(event_record(empty, FinalStatus::timed_out));
    CHECK(j["status"] == "timed-out");
    CHECK(j["final_votes"] == 0);
    CHECK(j["commit_tick"].is_null());
    CHECK(j["message_hash_hex"] == to_hex(empty.message_hash().digest));
}

TEST_CASE("stake registry invariants and JSON loading")
{
    StakeRegistry r(100);
    r.add({1, Bytes{2}, 60});
    CHECK_THROWS_AS(r.add({1, Bytes{2}, 10}), ConfigError);
    CHECK_THROWS_AS(r.add({2, Bytes{2}, 0}), ConfigError);
    CHECK_THROWS_AS(r.add({2, Bytes{2}, 41}), ConfigError);
    r.add({2, Bytes{3}, 40});
    CHECK(r.total_staked() == 100);

    std::stringstream round;
    r.save(round);
    const auto loaded = StakeRegistry::load(round);
    CHECK(loaded.records() == r.records());
    CHECK(loaded.total_supply() == 100);

    std::istringstream fractional(R"({"total_supply": 10, "envoys": [{"envoy_id": 1, "public_key": "02", "stake": 1.5}]})");
    try {
        StakeRegistry::load(fractional);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "stake");
    }
    std::istringstream quoted(R"({"total_supply": 10, "envoys": [{"envoy_id": 1, "public_key": "02", "stake": "3"}]})");
    CHECK_THROWS_AS(StakeRegistry::load(quoted), ConfigError);
    std::istringstream bad_hex(R"({"total_supply": 10, "envoys": [{"envoy_id": 1, "public_key": "0", "stake": 3}]})");
    CHECK_THROWS_AS(StakeRegistry::load(bad_hex), ConfigError);
}

#include "eden/envoy.hpp"
#include "eden/error.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace eden;
using namespace eden::envoy;

namespace {

CrossChainMessage sample_message(std::size_t payload = 40)
{
    CrossChainMessage m{7, 42, 1000, Bytes(payload)};
    for (std::size_t i = 0; i < payload; ++i)
        m.payload[i] = static_cast<std::uint8_t>(i * 31 + 1);
    return m;
}

struct Setup {
    sortition::SortitionParams params{100, sortition::Ratio{3, 10}, 10'000};
    fountain::CodecConfig codec = fountain::CodecConfig::for_params(params, kCanonicalHeaderSize + 40);
};

} // namespace

TEST_CASE("canonical encoding layout and round trip")
{
    const auto m = sample_message(3);
    const auto bytes = canonical_encode(m);
    CHECK(to_hex(bytes) == "00000007" "000000000000002a" "000003e8" "00000003" + to_hex(m.payload));
    CHECK(canonical_decode(bytes) == m);
    CHECK(canonical_length(bytes) == bytes.size());
    CHECK_FALSE(canonical_length(ByteView(bytes.data(), kCanonicalHeaderSize - 1)));

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(canonical_decode(trailing), FormatError);
    CHECK_THROWS_AS(canonical_decode(ByteView(bytes.data(), bytes.size() - 1)), FormatError);
    CHECK(message_hash(m).digest == sha256(bytes));
}

TEST_CASE("distinct messages hash differently")
{
    auto a = sample_message();
    auto b = a;
    b.sequence_number++;
    auto c = a;
    c.payload.back() ^= 1;
    CHECK(message_hash(a) != message_hash(b));
    CHECK(message_hash(a) != message_hash(c));
}

TEST_CASE("process_message emits a verifiable packet or abstains")
{
    Setup s;
    const auto msg = sample_message();
    int emitted = 0, abstained = 0;
    for (std::uint8_t i = 0; i < 40; ++i) {
        vrf::Seed seed{};
        seed[0] = i;
        const auto keys = vrf::keygen(seed);
        const EnvoyRecord record{i, keys.public_key, 300};
        auto packet = process_message(msg, keys, record, s.params, s.codec);
        if (!packet) {
            ++abstained;
            CHECK(sortition::compute_votes(vrf::Prover(keys, message_hash(msg)).output(), 300, s.params).votes == 0);
            continue;
        }
        ++emitted;
        CHECK(packet->envoy_id == i);
        CHECK(packet->message_hash == message_hash(msg));
        CHECK(vrf::verify(keys.public_key, packet->message_hash, {packet->vrf_random, packet->vrf_proof}));
        CHECK(packet->claimed_votes == sortition::compute_votes(packet->vrf_random, 300, s.params));
        CHECK(packet->claimed_votes.votes > 0);
        const auto ids = fountain::select_symbols(packet->vrf_random, packet->claimed_votes.votes, s.codec.tau);
        REQUIRE(packet->symbols.size() == ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k)
            CHECK(packet->symbols[k].symbol_id == ids[k]);
        // Pure: the same inputs give the same packet.
        CHECK(process_message(msg, keys, record, s.params, s.codec) == packet);
    }
    // Stake 300 at p = 0.01: Pr(v = 0) = 0.99^300 ~ 0.05.
    CHECK(emitted > 30);
    CHECK(abstained + emitted == 40);
}

TEST_CASE("messages beyond codec capacity are refused")
{
    Setup s;
    const auto keys = vrf::keygen(vrf::Seed{});
    const auto big = sample_message(s.codec.capacity());
    CHECK_THROWS_AS(process_message(big, keys, {0, keys.public_key, 300}, s.params, s.codec), SizeError);
}

TEST_CASE("packet wire format round trip and corruption")
{
    Setup s;
    const auto keys = vrf::keygen(vrf::Seed{});
    const auto msg = sample_message();
    std::optional<VotePacket> packet;
    for (std::uint64_t stake = 2000; !packet; stake += 1000)
        packet = process_message(msg, keys, {3, keys.public_key, stake}, s.params, s.codec);
    const auto wire = encode_packet(*packet);
    CHECK(wire.size() == packet_wire_size(*packet));
    CHECK(decode_packet(wire) == *packet);

    auto truncated = wire;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_packet(truncated), FormatError);
    auto extended = wire;
    extended.push_back(0);
    CHECK_THROWS_AS(decode_packet(extended), FormatError);
}

TEST_CASE("message feed parsing")
{
    std::istringstream ok(R"({"source_chain_id": 1, "sequence_number": 5, "commit_height": 9, "payload_hex": "beef"}

{"source_chain_id": 2, "sequence_number": 6, "commit_height": 10, "payload_hex": ""}
)");
    const auto feed = read_message_feed(ok);
    REQUIRE(feed.size() == 2);
    CHECK(feed[0].payload == Bytes{0xbe, 0xef});
    CHECK(feed[1].source_chain_id == 2);

    std::istringstream bad(R"({"source_chain_id": 1, "sequence_number": 5, "commit_height": 9, "payload_hex": "beef"}
{"source_chain_id": 1, "sequence_number": 5, "payload_hex": "00"}
)");
    try {
        read_message_feed(bad);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

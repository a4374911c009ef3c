#include "eden/envoy.hpp"
#include "eden/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <limits>

namespace eden::envoy {

Bytes canonical_encode(const CrossChainMessage& msg)
{
    if (msg.payload.size() > std::numeric_limits<std::uint32_t>::max())
        throw SizeError("payload length exceeds 2^32 - 1");
    Bytes out;
    out.reserve(kCanonicalHeaderSize + msg.payload.size());
    put_be32(out, msg.source_chain_id);
    put_be64(out, msg.sequence_number);
    put_be32(out, msg.commit_height);
    put_be32(out, static_cast<std::uint32_t>(msg.payload.size()));
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    return out;
}

CrossChainMessage canonical_decode(ByteView bytes)
{
    ByteReader reader(bytes);
    CrossChainMessage msg;
    msg.source_chain_id = reader.u32();
    msg.sequence_number = reader.u64();
    msg.commit_height = reader.u32();
    auto payload = reader.take(reader.u32());
    msg.payload.assign(payload.begin(), payload.end());
    if (!reader.done())
        throw FormatError("trailing bytes after canonical message");
    return msg;
}

std::optional<std::size_t> canonical_length(ByteView prefix)
{
    if (prefix.size() < kCanonicalHeaderSize)
        return std::nullopt;
    return kCanonicalHeaderSize + get_be32(prefix.subspan(16, 4));
}

vrf::MessageHash message_hash(const CrossChainMessage& msg)
{
    return {sha256(canonical_encode(msg))};
}

Bytes encode_packet(const VotePacket& packet)
{
    const std::size_t symbol_size = packet.symbols.empty() ? 0 : packet.symbols.front().payload.size();
    if (packet.vrf_proof.size() > 0xffff)
        throw SizeError("proof too large");
    Bytes out;
    out.reserve(packet_wire_size(packet));
    put_be32(out, packet.envoy_id);
    out.insert(out.end(), packet.message_hash.digest.begin(), packet.message_hash.digest.end());
    auto random = packet.vrf_random.to_bytes();
    out.insert(out.end(), random.begin(), random.end());
    out.push_back(static_cast<std::uint8_t>(packet.vrf_proof.size() >> 8));
    out.push_back(static_cast<std::uint8_t>(packet.vrf_proof.size()));
    out.insert(out.end(), packet.vrf_proof.begin(), packet.vrf_proof.end());
    put_be64(out, packet.claimed_votes.votes);
    put_be32(out, static_cast<std::uint32_t>(packet.symbols.size()));
    put_be32(out, static_cast<std::uint32_t>(symbol_size));
    for (const auto& s : packet.symbols) {
        if (s.payload.size() != symbol_size)
            throw FormatError("packet symbols have inconsistent sizes");
        put_be32(out, s.symbol_id);
        out.insert(out.end(), s.payload.begin(), s.payload.end());
    }
    return out;
}

VotePacket decode_packet(ByteView wire)
{
    ByteReader reader(wire);
    VotePacket packet;
    packet.envoy_id = reader.u32();
    packet.message_hash.digest = reader.digest();
    packet.vrf_random = sortition::UnitRandom::from_bytes(reader.digest());
    auto proof = reader.take(reader.u16());
    packet.vrf_proof.assign(proof.begin(), proof.end());
    packet.claimed_votes.votes = reader.u64();
    const std::uint32_t count = reader.u32();
    const std::uint32_t symbol_size = reader.u32();
    if (std::uint64_t{count} * (4 + symbol_size) != reader.remaining())
        throw FormatError("symbol section length mismatch");
    packet.symbols.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
        packet.symbols.push_back(fountain::symbol_from_wire(reader.take(4 + symbol_size), symbol_size));
    return packet;
}

std::size_t packet_wire_size(const VotePacket& packet) noexcept
{
    std::size_t size = 4 + 32 + 32 + 2 + packet.vrf_proof.size() + 8 + 4 + 4;
    for (const auto& s : packet.symbols)
        size += 4 + s.payload.size();
    return size;
}

VotePacket assemble_packet(const Bytes& canonical_message, const vrf::MessageHash& hash, std::uint32_t envoy_id,
                           const sortition::UnitRandom& random, Bytes proof, sortition::VoteWeight votes,
                           const fountain::CodecConfig& codec)
{
    VotePacket packet;
    packet.envoy_id = envoy_id;
    packet.message_hash = hash;
    packet.vrf_random = random;
    packet.vrf_proof = std::move(proof);
    packet.claimed_votes = votes;
    const auto count = std::min<std::uint64_t>(votes.votes, codec.tau);
    const auto ids = fountain::select_symbols(random, count, codec.tau);
    packet.symbols = fountain::encode_subset(canonical_message, codec, ids);
    return packet;
}

std::optional<VotePacket> process_message(const CrossChainMessage& msg, const vrf::KeyPair& keys,
                                          const EnvoyRecord& record, const sortition::SortitionParams& params,
                                          const fountain::CodecConfig& codec)
{
    const Bytes canonical = canonical_encode(msg);
    if (canonical.size() > codec.capacity())
        throw SizeError("canonical message of " + std::to_string(canonical.size())
                        + " bytes exceeds codec capacity " + std::to_string(codec.capacity()));
    const vrf::MessageHash hash{sha256(canonical)};

    vrf::Prover prover(keys, hash);
    const auto votes = sortition::compute_votes(prover.output(), record.stake, params);
    if (votes.votes == 0)
        return std::nullopt;
    return assemble_packet(canonical, hash, record.envoy_id, prover.output(), prover.proof(), votes, codec);
}

std::vector<CrossChainMessage> read_message_feed(std::istream& in)
{
    std::vector<CrossChainMessage> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            auto j = nlohmann::json::parse(line);
            CrossChainMessage msg;
            msg.source_chain_id = j.at("source_chain_id").get<std::uint32_t>();
            msg.sequence_number = j.at("sequence_number").get<std::uint64_t>();
            msg.commit_height = j.at("commit_height").get<std::uint32_t>();
            msg.payload = from_hex(j.at("payload_hex").get<std::string>());
            out.push_back(std::move(msg));
        } catch (const std::exception& e) {
            throw FormatError("message feed line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace eden::envoy

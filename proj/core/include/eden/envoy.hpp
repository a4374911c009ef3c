#pragma once

#include "eden/bytes.hpp"
#include "eden/fountain.hpp"
#include "eden/sortition.hpp"
#include "eden/vrf.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace eden::envoy {

inline constexpr std::size_t kCanonicalHeaderSize = 20;

struct CrossChainMessage {
    std::uint32_t source_chain_id = 0;
    std::uint64_t sequence_number = 0;
    std::uint32_t commit_height = 0;
    Bytes payload;

    friend bool operator==(const CrossChainMessage&, const CrossChainMessage&) = default;
};

/// source_chain_id (4) || sequence_number (8) || commit_height (4) || payload_length (4) || payload,
/// all big-endian. Throws SizeError when the payload does not fit a 32-bit length.
Bytes canonical_encode(const CrossChainMessage& msg);
/// Exact inverse of canonical_encode; trailing bytes are a FormatError.
CrossChainMessage canonical_decode(ByteView bytes);
/// Total encoded length announced by a header prefix, or nullopt if `prefix` is too short.
std::optional<std::size_t> canonical_length(ByteView prefix);

vrf::MessageHash message_hash(const CrossChainMessage& msg);

struct EnvoyRecord {
    std::uint32_t envoy_id = 0;
    Bytes public_key;
    std::uint64_t stake = 0;

    friend bool operator==(const EnvoyRecord&, const EnvoyRecord&) = default;
};

/// One envoy's vote on one message hash.
struct VotePacket {
    std::uint32_t envoy_id = 0;
    vrf::MessageHash message_hash;
    sortition::UnitRandom vrf_random;
    Bytes vrf_proof;
    sortition::VoteWeight claimed_votes;
    std::vector<fountain::EncodedSymbol> symbols;

    friend bool operator==(const VotePacket&, const VotePacket&) = default;
};

/// envoy_id (4) || message_hash (32) || vrf_random (32) || proof_len (2) || proof ||
/// claimed_votes (8) || symbol_count (4) || symbol_size (4) || symbols (id (4) || payload)*
Bytes encode_packet(const VotePacket& packet);
VotePacket decode_packet(ByteView wire);
std::size_t packet_wire_size(const VotePacket& packet) noexcept;

/// Retrieve-vote-encode for one envoy. Returns nullopt (abstain) when the sortition yields
/// zero votes; otherwise a packet carrying min(v, tau) symbols chosen by select_symbols.
/// Throws SizeError when the canonical message exceeds the codec capacity.
std::optional<VotePacket> process_message(const CrossChainMessage& msg, const vrf::KeyPair& keys,
                                          const EnvoyRecord& record, const sortition::SortitionParams& params,
                                          const fountain::CodecConfig& codec);

/// Builds the packet for already-computed sortition inputs. Used by process_message and by
/// the simulator's adversaries, which tamper with the pieces.
VotePacket assemble_packet(const Bytes& canonical_message, const vrf::MessageHash& hash, std::uint32_t envoy_id,
                           const sortition::UnitRandom& random, Bytes proof, sortition::VoteWeight votes,
                           const fountain::CodecConfig& codec);

/// JSON-lines ingestion: {source_chain_id, sequence_number, commit_height, payload_hex} per line.
/// Blank lines are skipped; malformed lines throw FormatError naming the line number.
std::vector<CrossChainMessage> read_message_feed(std::istream& in);

} // namespace eden::envoy

#pragma once

#include "eden/bytes.hpp"
#include "eden/sortition.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

// Systematic fountain code over a finite universe of tau symbols. Symbols with
// id < source_k are the padded source chunks; every other id carries a
// pseudo-random linear combination whose coefficients are a pure function of
// (codec kind, source_k, id), so a decoder needs nothing but the ids.
namespace eden::fountain {

inline constexpr double kDefaultOverhead = 0.15;

enum class CodecKind {
    /// dense random coefficients over GF(256)
    gf256,
    /// LT: robust soliton degrees (c = 0.1, delta = 0.05), GF(2) coefficients
    lt,
};

std::string_view to_string(CodecKind kind);
CodecKind parse_codec_kind(std::string_view text);

struct CodecConfig {
    std::uint32_t tau = 0;
    std::uint32_t source_k = 0;
    double overhead_epsilon = kDefaultOverhead;
    std::uint32_t symbol_size = 0;
    CodecKind kind = CodecKind::gf256;

    /// source_k = floor(ceil(theta*tau) / (1 + epsilon)); symbol_size just large enough for
    /// `message_size` bytes.
    static CodecConfig for_params(const sortition::SortitionParams& params, std::size_t message_size,
                                  double epsilon = kDefaultOverhead, CodecKind kind = CodecKind::gf256);

    /// Throws ConfigError unless source_k*(1+epsilon) <= vote_threshold and the sizes are sane.
    void validate(std::uint64_t vote_threshold) const;

    std::size_t capacity() const noexcept { return std::size_t{source_k} * symbol_size; }

    friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

struct EncodedSymbol {
    std::uint32_t symbol_id = 0;
    Bytes payload;

    friend bool operator==(const EncodedSymbol&, const EncodedSymbol&) = default;
};

/// symbol_id as 4-byte big-endian followed by the payload.
Bytes to_wire(const EncodedSymbol& symbol);
EncodedSymbol symbol_from_wire(ByteView wire, std::size_t symbol_size);

/// Coefficient row of `symbol_id` (length source_k).
Bytes coefficients(std::uint32_t symbol_id, const CodecConfig& config);

/// All tau symbols, ids 0..tau-1. Throws DomainError for an empty message and SizeError
/// when the message exceeds source_k * symbol_size.
std::vector<EncodedSymbol> encode(ByteView message, const CodecConfig& config);
/// Only the requested ids, in the given order.
std::vector<EncodedSymbol> encode_subset(ByteView message, const CodecConfig& config,
                                         std::span<const std::uint32_t> ids);

/// Incremental Gaussian elimination. Single owner; not thread-safe.
class Decoder {
public:
    explicit Decoder(const CodecConfig& config);

    /// Returns true when the symbol raised the rank. Throws FormatError for a wrong payload
    /// size or an id outside [0, tau).
    bool add(const EncodedSymbol& symbol);

    std::size_t rank() const noexcept { return rank_; }
    bool complete() const noexcept { return rank_ == config_.source_k; }
    const CodecConfig& config() const noexcept { return config_; }

    /// Padded source block (source_k * symbol_size bytes) once complete; state is not consumed.
    std::optional<Bytes> solve() const;

private:
    CodecConfig config_;
    std::size_t width_;
    std::size_t rank_ = 0;
    std::vector<Bytes> pivots_; ///< pivots_[c]: row with leading 1 in column c, or empty
};

/// Padded source block, or nullopt (needs more symbols). Throws FormatError if payload
/// sizes disagree with the config.
std::optional<Bytes> decode(std::span<const EncodedSymbol> symbols, const CodecConfig& config);
/// As above, truncated to the original message length.
std::optional<Bytes> decode(std::span<const EncodedSymbol> symbols, const CodecConfig& config,
                            std::size_t message_length);

/// `votes` distinct ids in [0, tau), sorted ascending: partial Fisher-Yates driven by a
/// mt19937_64 stream seeded from the 256 bits of `x`. Throws DomainError when votes > tau.
std::vector<std::uint32_t> select_symbols(const sortition::UnitRandom& x, std::uint64_t votes, std::uint32_t tau);

} // namespace eden::fountain

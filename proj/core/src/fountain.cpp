#include "eden/fountain.hpp"
#include "eden/error.hpp"

#include "gf256.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace eden::fountain {

namespace {

using detail::gf_inv;
using detail::gf_mul_add;
using detail::gf_scale;

template <class Rng>
std::uint64_t uniform_below(Rng& rng, std::uint64_t n)
{
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold)
            return r % n;
    }
}

std::mt19937_64 row_stream(std::string_view domain, std::uint32_t source_k, std::uint32_t symbol_id)
{
    Bytes tag;
    put_be32(tag, source_k);
    put_be32(tag, symbol_id);
    Digest d = sha256({as_bytes(domain), tag});
    return std::mt19937_64(get_be64(d));
}

/// Cumulative robust soliton distribution over degrees 1..k (index d-1).
std::vector<double> robust_soliton_cdf(std::uint32_t k)
{
    constexpr double c = 0.1;
    constexpr double delta = 0.05;
    const double kd = static_cast<double>(k);
    const double r = c * std::log(kd / delta) * std::sqrt(kd);
    const auto spike = static_cast<std::uint32_t>(std::clamp(std::floor(kd / r), 1.0, kd));

    std::vector<double> mass(k);
    for (std::uint32_t d = 1; d <= k; ++d) {
        double rho = d == 1 ? 1.0 / kd : 1.0 / (static_cast<double>(d) * (d - 1));
        double tau = 0;
        if (d < spike)
            tau = r / (static_cast<double>(d) * kd);
        else if (d == spike)
            tau = r * std::log(r / delta) / kd;
        mass[d - 1] = rho + std::max(tau, 0.0);
    }
    std::partial_sum(mass.begin(), mass.end(), mass.begin());
    const double total = mass.back();
    for (auto& m : mass)
        m /= total;
    mass.back() = 1.0;
    return mass;
}

void check_geometry(const CodecConfig& config)
{
    if (config.source_k == 0 || config.symbol_size == 0 || config.tau < config.source_k)
        throw ConfigError("codec needs 1 <= source_k <= tau and symbol_size >= 1");
}

Bytes padded_block(ByteView message, const CodecConfig& config)
{
    check_geometry(config);
    if (message.empty())
        throw DomainError("cannot encode an empty message");
    if (message.size() > config.capacity())
        throw SizeError("message of " + std::to_string(message.size()) + " bytes exceeds codec capacity "
                        + std::to_string(config.capacity()));
    Bytes block(config.capacity(), 0);
    std::copy(message.begin(), message.end(), block.begin());
    return block;
}

EncodedSymbol make_symbol(const Bytes& block, const CodecConfig& config, std::uint32_t id)
{
    if (id >= config.tau)
        throw DomainError("symbol id outside the symbol universe");
    const std::size_t size = config.symbol_size;
    EncodedSymbol symbol{id, Bytes(size, 0)};
    if (id < config.source_k) {
        std::copy_n(block.begin() + static_cast<std::ptrdiff_t>(id * size), size, symbol.payload.begin());
        return symbol;
    }
    Bytes coef = coefficients(id, config);
    for (std::size_t j = 0; j < coef.size(); ++j)
        gf_mul_add(symbol.payload.data(), block.data() + j * size, coef[j], size);
    return symbol;
}

} // namespace

std::string_view to_string(CodecKind kind)
{
    return kind == CodecKind::gf256 ? "gf256" : "lt";
}

CodecKind parse_codec_kind(std::string_view text)
{
    if (text == "gf256")
        return CodecKind::gf256;
    if (text == "lt")
        return CodecKind::lt;
    throw ConfigError("unknown codec '" + std::string(text) + "' (expected gf256 or lt)", "codec");
}

CodecConfig CodecConfig::for_params(const sortition::SortitionParams& params, std::size_t message_size,
                                    double epsilon, CodecKind kind)
{
    if (!(epsilon >= 0))
        throw ConfigError("overhead must be non-negative", "overhead_epsilon");
    if (params.tau() > UINT32_MAX)
        throw ConfigError("tau exceeds the 32-bit symbol id space", "tau");
    CodecConfig config;
    config.tau = static_cast<std::uint32_t>(params.tau());
    config.overhead_epsilon = epsilon;
    config.kind = kind;
    config.source_k = static_cast<std::uint32_t>(
        std::floor(static_cast<double>(params.vote_threshold()) / (1.0 + epsilon) + 1e-9));
    if (config.source_k == 0)
        throw ConfigError("vote threshold too small for any source symbol", "source_k");
    config.symbol_size = static_cast<std::uint32_t>(
        std::max<std::size_t>(1, (message_size + config.source_k - 1) / config.source_k));
    return config;
}

void CodecConfig::validate(std::uint64_t vote_threshold) const
{
    if (source_k == 0)
        throw ConfigError("must be at least 1", "source_k");
    if (symbol_size == 0)
        throw ConfigError("must be at least 1", "symbol_size");
    if (!(overhead_epsilon >= 0))
        throw ConfigError("must be non-negative", "overhead_epsilon");
    if (source_k > tau)
        throw ConfigError("exceeds tau", "source_k");
    if (static_cast<double>(source_k) * (1.0 + overhead_epsilon) > static_cast<double>(vote_threshold) + 1e-9)
        throw ConfigError("source_k*(1+epsilon) = "
                              + std::to_string(static_cast<double>(source_k) * (1.0 + overhead_epsilon))
                              + " exceeds the vote threshold " + std::to_string(vote_threshold),
                          "source_k");
}

Bytes to_wire(const EncodedSymbol& symbol)
{
    Bytes out;
    out.reserve(4 + symbol.payload.size());
    put_be32(out, symbol.symbol_id);
    out.insert(out.end(), symbol.payload.begin(), symbol.payload.end());
    return out;
}

EncodedSymbol symbol_from_wire(ByteView wire, std::size_t symbol_size)
{
    if (wire.size() != 4 + symbol_size)
        throw FormatError("symbol wire length does not match the symbol size");
    return {get_be32(wire), Bytes(wire.begin() + 4, wire.end())};
}

Bytes coefficients(std::uint32_t symbol_id, const CodecConfig& config)
{
    check_geometry(config);
    const std::uint32_t k = config.source_k;
    Bytes coef(k, 0);
    if (symbol_id < k) {
        coef[symbol_id] = 1;
        return coef;
    }
    if (config.kind == CodecKind::gf256) {
        auto rng = row_stream("eden/fountain/gf256", k, symbol_id);
        for (std::uint32_t j = 0; j < k; j += 8) {
            std::uint64_t word = rng();
            for (std::uint32_t b = 0; b < 8 && j + b < k; ++b)
                coef[j + b] = static_cast<std::uint8_t>(word >> (8 * b));
        }
        return coef;
    }

    auto rng = row_stream("eden/fountain/lt", k, symbol_id);
    const auto cdf = robust_soliton_cdf(k);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const auto degree = static_cast<std::uint32_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()) + 1;
    std::vector<std::uint32_t> columns(k);
    std::iota(columns.begin(), columns.end(), 0u);
    for (std::uint32_t i = 0; i < std::min(degree, k); ++i) {
        auto j = i + static_cast<std::uint32_t>(uniform_below(rng, k - i));
        std::swap(columns[i], columns[j]);
        coef[columns[i]] = 1;
    }
    return coef;
}

std::vector<EncodedSymbol> encode(ByteView message, const CodecConfig& config)
{
    std::vector<std::uint32_t> ids(config.tau);
    std::iota(ids.begin(), ids.end(), 0u);
    return encode_subset(message, config, ids);
}

std::vector<EncodedSymbol> encode_subset(ByteView message, const CodecConfig& config,
                                         std::span<const std::uint32_t> ids)
{
    const Bytes block = padded_block(message, config);
    std::vector<EncodedSymbol> out;
    out.reserve(ids.size());
    for (auto id : ids)
        out.push_back(make_symbol(block, config, id));
    return out;
}

Decoder::Decoder(const CodecConfig& config)
    : config_(config), width_(std::size_t{config.source_k} + config.symbol_size), pivots_(config.source_k)
{
    check_geometry(config);
}

bool Decoder::add(const EncodedSymbol& symbol)
{
    if (symbol.payload.size() != config_.symbol_size)
        throw FormatError("symbol payload size does not match the codec");
    if (symbol.symbol_id >= config_.tau)
        throw FormatError("symbol id outside the symbol universe");
    if (complete())
        return false;

    const std::size_t k = config_.source_k;
    Bytes row = coefficients(symbol.symbol_id, config_);
    row.insert(row.end(), symbol.payload.begin(), symbol.payload.end());

    std::size_t lead = k;
    for (std::size_t c = 0; c < k; ++c) {
        if (row[c] == 0)
            continue;
        if (pivots_[c].empty()) {
            lead = c;
            break;
        }
        gf_mul_add(row.data() + c, pivots_[c].data() + c, row[c], width_ - c);
    }
    if (lead == k)
        return false;
    // entries past `lead` may sit in other pivot columns; echelon form only needs zeros before it
    gf_scale(row.data() + lead, gf_inv(row[lead]), width_ - lead);
    pivots_[lead] = std::move(row);
    ++rank_;
    return true;
}

std::optional<Bytes> Decoder::solve() const
{
    if (!complete())
        return std::nullopt;
    const std::size_t k = config_.source_k;
    const std::size_t size = config_.symbol_size;
    Bytes block(k * size);
    for (std::size_t c = k; c-- > 0;) {
        const Bytes& row = pivots_[c];
        std::uint8_t* out = block.data() + c * size;
        std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(k), size, out);
        for (std::size_t j = c + 1; j < k; ++j)
            gf_mul_add(out, block.data() + j * size, row[j], size);
    }
    return block;
}

std::optional<Bytes> decode(std::span<const EncodedSymbol> symbols, const CodecConfig& config)
{
    for (const auto& s : symbols)
        if (s.payload.size() != config.symbol_size)
            throw FormatError("inconsistent symbol sizes");
    Decoder decoder(config);
    for (const auto& s : symbols) {
        decoder.add(s);
        if (decoder.complete())
            break;
    }
    return decoder.solve();
}

std::optional<Bytes> decode(std::span<const EncodedSymbol> symbols, const CodecConfig& config,
                            std::size_t message_length)
{
    auto block = decode(symbols, config);
    if (block) {
        if (message_length > block->size())
            throw FormatError("message length exceeds the decoded block");
        block->resize(message_length);
    }
    return block;
}

std::vector<std::uint32_t> select_symbols(const sortition::UnitRandom& x, std::uint64_t votes, std::uint32_t tau)
{
    if (votes > tau)
        throw DomainError("cannot select more symbols than tau");
    std::vector<std::uint32_t> ids(tau);
    std::iota(ids.begin(), ids.end(), 0u);
    if (votes == tau)
        return ids;

    Digest bytes = x.to_bytes();
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); ++i)
        words[i] = get_be32(ByteView(bytes).subspan(4 * i, 4));
    std::seed_seq seq(words.begin(), words.end());
    std::mt19937_64 rng(seq);

    for (std::uint64_t i = 0; i < votes; ++i) {
        auto j = i + uniform_below(rng, tau - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(votes);
    std::sort(ids.begin(), ids.end());
    return ids;
}

} // namespace eden::fountain

#include "eden/bytes.hpp"
#include "eden/error.hpp"

#include <openssl/evp.h>

#include <memory>

namespace eden {

namespace {

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::string to_hex(ByteView bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0)
        throw FormatError("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw FormatError("invalid hex character");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Digest digest_from_hex(std::string_view hex)
{
    auto bytes = from_hex(hex);
    if (bytes.size() != 32)
        throw FormatError("digest must be 32 bytes");
    Digest d;
    std::copy(bytes.begin(), bytes.end(), d.begin());
    return d;
}

Digest sha256(std::initializer_list<ByteView> parts)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    Digest out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 init failed");
    for (auto part : parts)
        EVP_DigestUpdate(ctx.get(), part.data(), part.size());
    EVP_DigestFinal_ex(ctx.get(), out.data(), &len);
    return out;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint16_t ByteReader::u16()
{
    auto b = take(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32() { return get_be32(take(4)); }

std::uint64_t ByteReader::u64() { return get_be64(take(8)); }

ByteView ByteReader::take(std::size_t n)
{
    if (n > remaining())
        throw FormatError("truncated input");
    auto view = data_.subspan(pos_, n);
    pos_ += n;
    return view;
}

Digest ByteReader::digest()
{
    Digest d;
    auto b = take(d.size());
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

} // namespace eden

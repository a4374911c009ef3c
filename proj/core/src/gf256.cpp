#include "gf256.hpp"

#include <array>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define EDEN_GF_X86 1
#endif

namespace eden::fountain::detail {

namespace {

struct Tables {
    std::array<std::uint8_t, 512> exp{};
    std::array<std::uint8_t, 256> log{};
    std::array<std::array<std::uint8_t, 256>, 256> mul{};
    // nibble tables for the shuffle kernel: lo[c][x] = c*x, hi[c][x] = c*(x<<4)
    alignas(16) std::array<std::array<std::uint8_t, 16>, 256> lo{};
    alignas(16) std::array<std::array<std::uint8_t, 16>, 256> hi{};

    Tables()
    {
        unsigned x = 1;
        for (unsigned i = 0; i < 255; ++i) {
            exp[i] = static_cast<std::uint8_t>(x);
            log[x] = static_cast<std::uint8_t>(i);
            x <<= 1;
            if (x & 0x100)
                x ^= 0x11d;
        }
        for (unsigned i = 255; i < 512; ++i)
            exp[i] = exp[i - 255];
        for (unsigned a = 1; a < 256; ++a)
            for (unsigned b = 1; b < 256; ++b)
                mul[a][b] = exp[log[a] + log[b]];
        for (unsigned c = 0; c < 256; ++c)
            for (unsigned n = 0; n < 16; ++n) {
                lo[c][n] = mul[c][n];
                hi[c][n] = mul[c][n << 4];
            }
    }
};

const Tables& tables()
{
    static const Tables t;
    return t;
}

#ifdef EDEN_GF_X86
__attribute__((target("avx2"))) void mul_add_avx2(std::uint8_t* dst, const std::uint8_t* src, const std::uint8_t* lo,
                                                  const std::uint8_t* hi, std::size_t n) noexcept
{
    const __m256i tlo = _mm256_broadcastsi128_si256(_mm_loadu_si128(reinterpret_cast<const __m128i*>(lo)));
    const __m256i thi = _mm256_broadcastsi128_si256(_mm_loadu_si128(reinterpret_cast<const __m128i*>(hi)));
    const __m256i mask = _mm256_set1_epi8(0x0f);
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
        __m256i l = _mm256_and_si256(s, mask);
        __m256i h = _mm256_and_si256(_mm256_srli_epi64(s, 4), mask);
        __m256i p = _mm256_xor_si256(_mm256_shuffle_epi8(tlo, l), _mm256_shuffle_epi8(thi, h));
        __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), _mm256_xor_si256(d, p));
    }
    for (; i < n; ++i)
        dst[i] ^= static_cast<std::uint8_t>(lo[src[i] & 0x0f] ^ hi[src[i] >> 4]);
}

__attribute__((target("avx2"))) void xor_avx2(std::uint8_t* dst, const std::uint8_t* src, std::size_t n) noexcept
{
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        __m256i s = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + i));
        __m256i d = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(dst + i));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), _mm256_xor_si256(d, s));
    }
    for (; i < n; ++i)
        dst[i] ^= src[i];
}

bool has_avx2() noexcept
{
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported;
}
#endif

} // namespace

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) noexcept { return tables().mul[a][b]; }

std::uint8_t gf_inv(std::uint8_t a) noexcept
{
    const auto& t = tables();
    return a == 0 ? 0 : t.exp[255 - t.log[a]];
}

void gf_mul_add(std::uint8_t* dst, const std::uint8_t* src, std::uint8_t c, std::size_t n) noexcept
{
    if (c == 0)
        return;
    const auto& t = tables();
#ifdef EDEN_GF_X86
    if (has_avx2()) {
        if (c == 1)
            xor_avx2(dst, src, n);
        else
            mul_add_avx2(dst, src, t.lo[c].data(), t.hi[c].data(), n);
        return;
    }
#endif
    if (c == 1) {
        for (std::size_t i = 0; i < n; ++i)
            dst[i] ^= src[i];
        return;
    }
    const auto& row = t.mul[c];
    for (std::size_t i = 0; i < n; ++i)
        dst[i] ^= row[src[i]];
}

void gf_scale(std::uint8_t* row, std::uint8_t c, std::size_t n) noexcept
{
    if (c == 1)
        return;
    const auto& m = tables().mul[c];
    for (std::size_t i = 0; i < n; ++i)
        row[i] = m[row[i]];
}

} // namespace eden::fountain::detail

#pragma once

#include <cstddef>
#include <cstdint>

// GF(2^8) with the 0x11d reduction polynomial.
namespace eden::fountain::detail {

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) noexcept;
std::uint8_t gf_inv(std::uint8_t a) noexcept;

/// dst[i] ^= c * src[i]
void gf_mul_add(std::uint8_t* dst, const std::uint8_t* src, std::uint8_t c, std::size_t n) noexcept;
/// row[i] = c * row[i]
void gf_scale(std::uint8_t* row, std::uint8_t c, std::size_t n) noexcept;

} // namespace eden::fountain::detail

#include "tcu/half.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

namespace tcu {

namespace {

// Round a finite, normal binary-W value (sign, unbiased exponent, full
// significand including the implicit bit) to binary16, RNE.
template <typename UInt, int kMantBits>
std::uint16_t round_to_half(std::uint16_t sign, int exponent, UInt significand) noexcept
{
    if (exponent > 15)
        return sign | 0x7C00u;

    // quantum of the binary16 result, relative to the source LSB
    const int shift = exponent >= -14 ? kMantBits - 10 : kMantBits - 10 + (-14 - exponent);
    if (shift > kMantBits + 1)
        return sign;

    const UInt q = significand >> shift;
    const UInt rem = significand & ((UInt{1} << shift) - 1);
    const UInt halfway = UInt{1} << (shift - 1);
    UInt rounded = q;
    if (rem > halfway || (rem == halfway && (q & 1u)))
        ++rounded;

    std::uint32_t bits;
    if (exponent >= -14)
        bits = (static_cast<std::uint32_t>(exponent + 14) << 10) + static_cast<std::uint32_t>(rounded);
    else
        bits = static_cast<std::uint32_t>(rounded);
    if (bits >= 0x7C00u)
        bits = 0x7C00u;
    return static_cast<std::uint16_t>(sign | bits);
}

} // namespace

Half from_f32(float x) noexcept
{
    const auto u = std::bit_cast<std::uint32_t>(x);
    const auto sign = static_cast<std::uint16_t>((u >> 16) & 0x8000u);
    const std::uint32_t exp = (u >> 23) & 0xFFu;
    const std::uint32_t mant = u & 0x7FFFFFu;

    if (exp == 0xFFu) {
        if (mant == 0)
            return Half::from_bits(sign | 0x7C00u);
        // quiet NaN, keep the top payload bits
        return Half::from_bits(static_cast<std::uint16_t>(sign | 0x7E00u | (mant >> 13)));
    }
    if (exp == 0) // binary32 subnormals are below half of the smallest binary16 subnormal
        return Half::from_bits(sign);

    return Half::from_bits(
        round_to_half<std::uint32_t, 23>(sign, static_cast<int>(exp) - 127, mant | 0x800000u));
}

Half from_f64(double x) noexcept
{
    const auto u = std::bit_cast<std::uint64_t>(x);
    const auto sign = static_cast<std::uint16_t>((u >> 48) & 0x8000u);
    const std::uint64_t exp = (u >> 52) & 0x7FFu;
    const std::uint64_t mant = u & 0xFFFFFFFFFFFFFull;

    if (exp == 0x7FFu) {
        if (mant == 0)
            return Half::from_bits(sign | 0x7C00u);
        return Half::from_bits(static_cast<std::uint16_t>(sign | 0x7E00u | ((mant >> 42) & 0x3FFu)));
    }
    if (exp == 0)
        return Half::from_bits(sign);

    return Half::from_bits(round_to_half<std::uint64_t, 52>(
        sign, static_cast<int>(exp) - 1023, mant | (std::uint64_t{1} << 52)));
}

float to_f32(Half h) noexcept
{
    const std::uint32_t bits = h.bits();
    const std::uint32_t sign = (bits & 0x8000u) << 16;
    const std::uint32_t exp = (bits >> 10) & 0x1Fu;
    const std::uint32_t mant = bits & 0x3FFu;

    if (exp == 0) {
        const float mag = std::ldexp(static_cast<float>(mant), -24);
        return sign ? -mag : mag;
    }
    if (exp == 0x1Fu)
        return std::bit_cast<float>(sign | 0x7F800000u | (mant << 13));
    return std::bit_cast<float>(sign | ((exp - 15 + 127) << 23) | (mant << 13));
}

Half add(Half a, Half b) noexcept { return from_f32(to_f32(a) + to_f32(b)); }

Half mul(Half a, Half b) noexcept { return from_f32(to_f32(a) * to_f32(b)); }

bool ieee_equal(Half a, Half b) noexcept { return to_f32(a) == to_f32(b); }

bool ieee_less(Half a, Half b) noexcept { return to_f32(a) < to_f32(b); }

bool parse_half(std::string_view text, Half& out)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty())
        return false;
    if (text.front() == '+')
        text.remove_prefix(1);

    float value = 0.0f;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec == std::errc::result_out_of_range) {
        // from_chars reports overflow/underflow without a value; redo it wide
        const std::string copy(text);
        value = std::strtof(copy.c_str(), nullptr);
    } else if (ec != std::errc()) {
        return false;
    }
    if (ptr != text.data() + text.size())
        return false;
    out = from_f32(value);
    return true;
}

std::ostream& operator<<(std::ostream& os, Half h) { return os << to_f32(h); }

} // namespace tcu

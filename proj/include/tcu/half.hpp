#pragma once

// IEEE 754 binary16 scalar.
//
// Conversions from binary32/binary64 round to nearest, ties to even, and
// keep subnormals (no flush-to-zero). add() and mul() widen to binary32,
// operate, and round back once. That is exact: binary32 carries 24
// significand bits >= 2*11 + 2, so the binary32 result rounded to binary16
// equals the directly rounded binary16 result for + and *.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string_view>

namespace tcu {

class Half {
public:
    constexpr Half() noexcept = default;

    static constexpr Half from_bits(std::uint16_t bits) noexcept
    {
        Half h;
        h.bits_ = bits;
        return h;
    }

    constexpr std::uint16_t bits() const noexcept { return bits_; }

    constexpr bool is_nan() const noexcept
    {
        return (bits_ & 0x7C00u) == 0x7C00u && (bits_ & 0x03FFu) != 0;
    }
    constexpr bool is_inf() const noexcept { return (bits_ & 0x7FFFu) == 0x7C00u; }
    constexpr bool is_finite() const noexcept { return (bits_ & 0x7C00u) != 0x7C00u; }
    constexpr bool signbit() const noexcept { return (bits_ & 0x8000u) != 0; }

    // Bitwise identity. Use ieee_equal() for IEEE comparison semantics.
    friend constexpr bool operator==(Half a, Half b) noexcept { return a.bits_ == b.bits_; }

private:
    std::uint16_t bits_ = 0;
};

Half from_f32(float x) noexcept;
Half from_f64(double x) noexcept;
float to_f32(Half h) noexcept;
inline double to_f64(Half h) noexcept { return static_cast<double>(to_f32(h)); }

Half add(Half a, Half b) noexcept;
Half mul(Half a, Half b) noexcept;

// IEEE comparisons: NaN is unordered, +0 == -0.
bool ieee_equal(Half a, Half b) noexcept;
bool ieee_less(Half a, Half b) noexcept;

inline Half operator+(Half a, Half b) noexcept { return add(a, b); }
inline Half operator*(Half a, Half b) noexcept { return mul(a, b); }
inline Half& operator+=(Half& a, Half b) noexcept { return a = add(a, b); }
inline Half operator-(Half a) noexcept { return Half::from_bits(a.bits() ^ 0x8000u); }

// Decimal or scientific literal, parsed to binary32 and then rounded.
// Returns false if the text is not a complete number.
bool parse_half(std::string_view text, Half& out);

std::ostream& operator<<(std::ostream& os, Half h);

namespace literals {
inline Half operator""_h(long double v) { return from_f64(static_cast<double>(v)); }
inline Half operator""_h(unsigned long long v) { return from_f64(static_cast<double>(v)); }
} // namespace literals

// Largest n such that every integer in [-n, n] is exactly representable.
inline constexpr int kHalfExactIntegerLimit = 2048;
inline constexpr Half kHalfZero = Half::from_bits(0x0000);
inline constexpr Half kHalfOne = Half::from_bits(0x3C00);
inline constexpr Half kHalfInf = Half::from_bits(0x7C00);
inline constexpr Half kHalfMax = Half::from_bits(0x7BFF);

} // namespace tcu

template <>
class std::numeric_limits<tcu::Half> {
public:
    static constexpr bool is_specialized = true;
    static constexpr bool is_signed = true;
    static constexpr bool is_integer = false;
    static constexpr bool is_exact = false;
    static constexpr bool has_infinity = true;
    static constexpr bool has_quiet_NaN = true;
    static constexpr bool has_denorm_loss = false;
    static constexpr std::float_denorm_style has_denorm = std::denorm_present;
    static constexpr std::float_round_style round_style = std::round_to_nearest;
    static constexpr bool is_iec559 = true;
    static constexpr int digits = 11;
    static constexpr int digits10 = 3;
    static constexpr int max_digits10 = 5;
    static constexpr int radix = 2;
    static constexpr int min_exponent = -13;
    static constexpr int max_exponent = 16;

    static constexpr tcu::Half min() noexcept { return tcu::Half::from_bits(0x0400); }
    static constexpr tcu::Half lowest() noexcept { return tcu::Half::from_bits(0xFBFF); }
    static constexpr tcu::Half max() noexcept { return tcu::Half::from_bits(0x7BFF); }
    static constexpr tcu::Half epsilon() noexcept { return tcu::Half::from_bits(0x1400); }
    static constexpr tcu::Half round_error() noexcept { return tcu::Half::from_bits(0x3800); }
    static constexpr tcu::Half infinity() noexcept { return tcu::Half::from_bits(0x7C00); }
    static constexpr tcu::Half quiet_NaN() noexcept { return tcu::Half::from_bits(0x7E00); }
    static constexpr tcu::Half denorm_min() noexcept { return tcu::Half::from_bits(0x0001); }
};

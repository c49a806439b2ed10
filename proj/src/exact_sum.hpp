#pragma once

// Exact fixed-point accumulation and single rounding for the MMA model.

#include "tcu/half.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

namespace tcu::detail {

using i128 = __int128;
using u128 = unsigned __int128;

// Signed scaled integer: value = mant * 2^exp.
struct Scaled {
    i128 mant = 0;
    int exp = 0;
};

// Finite Half as an integer multiple of 2^-24 (magnitude < 2^40).
inline std::int64_t half_to_fixed24(Half h) noexcept
{
    const std::uint32_t bits = h.bits();
    const std::uint32_t e = (bits >> 10) & 0x1Fu;
    const std::int64_t m = bits & 0x3FFu;
    const std::int64_t mag = e == 0 ? m : ((m | 0x400) << (e - 1));
    return (bits & 0x8000u) ? -mag : mag;
}

// Finite float as mant * 2^exp with a 24-bit integer significand.
inline Scaled float_to_scaled(float f) noexcept
{
    const auto u = std::bit_cast<std::uint32_t>(f);
    const int e = static_cast<int>((u >> 23) & 0xFFu);
    std::int64_t m = u & 0x7FFFFFu;
    int exp;
    if (e == 0) {
        exp = -149;
    } else {
        m |= 0x800000;
        exp = e - 150;
    }
    return {(u & 0x80000000u) ? -static_cast<i128>(m) : static_cast<i128>(m), exp};
}

inline int msb(u128 x) noexcept
{
    const auto hi = static_cast<std::uint64_t>(x >> 64);
    if (hi)
        return 127 - std::countl_zero(hi);
    return 63 - std::countl_zero(static_cast<std::uint64_t>(x));
}

inline u128 magnitude(i128 x) noexcept { return x < 0 ? -static_cast<u128>(x) : static_cast<u128>(x); }

// Exact a + b when it fits, otherwise a + b with every bit lost during
// alignment folded into an odd sticky LSB. The result is only ever used for
// rounding to <= 24 significant bits, which keeps the sticky bit far below
// any rounding boundary.
inline Scaled add_scaled(Scaled a, Scaled b) noexcept
{
    if (a.mant == 0)
        return b;
    if (b.mant == 0)
        return a;

    auto top = [](const Scaled& s) { return msb(magnitude(s.mant)) + s.exp; };
    if (top(a) < top(b))
        std::swap(a, b);

    // Put a's leading bit at position 100, leaving headroom for the sum.
    const int lift = 100 - msb(magnitude(a.mant));
    a.mant = lift >= 0 ? a.mant * (i128{1} << lift) : a.mant / (i128{1} << -lift);
    a.exp -= lift;

    const int shift = b.exp - a.exp;
    if (shift >= 0) {
        // b is no larger than a, so its aligned leading bit stays <= 100
        return {a.mant + b.mant * (i128{1} << shift), a.exp};
    }

    const int drop = -shift;
    const u128 bmag = magnitude(b.mant);
    u128 kept = drop >= 128 ? 0 : bmag >> drop;
    const bool lost = drop >= 128 ? bmag != 0 : (bmag & ((u128{1} << drop) - 1)) != 0;
    i128 bk = static_cast<i128>(kept);
    if (b.mant < 0)
        bk = -bk;
    if (!lost)
        return {a.mant + bk, a.exp};

    // one extra bit, with an odd sticky marking the true value as
    // strictly between two neighbours
    const i128 sticky = b.mant < 0 ? -1 : 1;
    return {2 * a.mant + 2 * bk + sticky, a.exp - 1};
}

// Round mant * 2^exp to a binary format with `digits` significand bits and
// minimum normal exponent `emin`, RNE. Returns the rounded value as a
// double (always exact) or +-inf on overflow past `emax`.
inline double round_scaled(Scaled v, int digits, int emin, int emax) noexcept
{
    if (v.mant == 0)
        return 0.0;
    const bool neg = v.mant < 0;
    const u128 mag = magnitude(v.mant);
    const int p = msb(mag);
    const int value_exp = p + v.exp; // floor(log2 |v|)

    const int quantum_exp = (value_exp >= emin ? value_exp : emin) - (digits - 1);
    const int shift = quantum_exp - v.exp;

    u128 q;
    if (shift <= 0) {
        q = mag << -shift;
    } else if (shift > 127) {
        q = 0;
    } else {
        q = mag >> shift;
        const u128 rem = mag & ((u128{1} << shift) - 1);
        const u128 halfway = u128{1} << (shift - 1);
        if (rem > halfway || (rem == halfway && (q & 1)))
            ++q;
    }

    double result = std::ldexp(static_cast<double>(q), quantum_exp);
    const double limit = std::ldexp(2.0 - std::ldexp(1.0, -(digits - 1)), emax);
    if (result > limit)
        result = INFINITY;
    return neg ? -result : result;
}

} // namespace tcu::detail

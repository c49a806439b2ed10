#pragma once

// Shared warp-level building blocks for the reduction and scan kernels.

#include "tcu/engine.hpp"
#include "tcu/error.hpp"

#include <span>
#include <string>
#include <type_traits>

namespace tcu::detail {

inline constexpr std::size_t kTileElems = 256;
inline constexpr std::size_t kTileDim = 16;

// Load an MMA operand from a buffer of either binary16 or accumulator
// type. Operands must be binary16, so an accumulator-typed buffer goes in
// as an accumulator tile and is cast.
template <typename In>
HalfFragment load_operand(Engine& engine, std::span<const In> buffer, std::size_t offset,
                          Layout layout, std::size_t stride, FragmentKind kind)
{
    if constexpr (std::is_same_v<In, Half>) {
        return engine.load_tile<Half>(buffer, offset, layout, stride, kind);
    } else {
        const auto acc = engine.load_tile<In>(buffer, offset, layout, stride, FragmentKind::Accumulator);
        return engine.cast_kind<Half>(acc, kind);
    }
}

template <typename Acc>
Fragment<Acc> zero_accumulator(Engine& engine)
{
    return engine.fill<Acc>(kTile16x16x16, FragmentKind::Accumulator, Acc{});
}

inline void require_length(std::size_t actual, std::size_t expected, const char* what)
{
    if (actual != expected) {
        throw Error(Errc::BadLength, std::string(what) + ": expected " + std::to_string(expected) +
                                         " elements, got " + std::to_string(actual));
    }
}

inline void require_multiple(std::size_t actual, std::size_t unit, const char* what)
{
    if (unit == 0 || actual % unit != 0) {
        throw Error(Errc::BadLength, std::string(what) + ": length " + std::to_string(actual) +
                                         " is not a multiple of " + std::to_string(unit));
    }
}

// Work-efficient 256N reduction over a buffer of binary16 or accumulator
// values: V_i = P.A_i + V_{i-1}, then R = V_N.P^T.
template <typename Acc, typename In>
Acc reduce_tiles(std::span<const In> input, std::size_t n, Engine& engine)
{
    require_length(input.size(), kTileElems * n, "reduce_256n");
    if (n == 0)
        throw Error(Errc::BadLength, "reduce_256n: need at least one tile");

    const auto p = engine.make_P();
    const auto pt = engine.make_PT();
    auto v = zero_accumulator<Acc>(engine);
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = load_operand<In>(engine, input, kTileElems * i, Layout::ColMajor, kTileDim,
                                        FragmentKind::MatrixB);
        v = engine.mma(p, a, v);
    }
    const auto va = engine.cast_kind<Half>(v, FragmentKind::MatrixA);
    const auto r = engine.mma(va, pt, zero_accumulator<Acc>(engine));
    const Acc total = engine.extract(r, 0, 0);
    engine.record_element_stores(1);
    return total;
}

// Inclusive scan of 256N contiguous values as one segment. Each tile is
// R = L.A.1 + A.U + S with S the running total broadcast.
template <typename Acc, typename In>
void scan_tiles(std::span<const In> input, std::size_t n, std::span<Acc> output, Engine& engine)
{
    require_length(input.size(), kTileElems * n, "scan_256n");
    require_length(output.size(), kTileElems * n, "scan_256n output");

    const auto u = engine.make_U();
    const auto l = engine.make_L();
    const auto ones = engine.make_ones(FragmentKind::MatrixB);
    const auto zero = zero_accumulator<Acc>(engine);
    auto carry = zero;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = kTileElems * i;
        const auto a_rows = load_operand<In>(engine, input, idx, Layout::RowMajor, kTileDim,
                                             FragmentKind::MatrixA);
        const auto a_cols = load_operand<In>(engine, input, idx, Layout::RowMajor, kTileDim,
                                             FragmentKind::MatrixB);
        const auto au = engine.mma(a_rows, u, carry);
        const auto la = engine.mma(l, a_cols, zero);
        const auto la_op = engine.cast_kind<Half>(la, FragmentKind::MatrixA);
        const auto r = engine.mma(la_op, ones, au);
        engine.store_tile<Acc>(r, output, idx, Layout::RowMajor, kTileDim);
        carry = engine.broadcast<Acc>(engine.extract(r, 15, 15));
    }
}

} // namespace tcu::detail

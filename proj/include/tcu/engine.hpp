#pragma once

// Functional model of one warp's tensor-core unit.
//
// An Engine owns a warp's cost counters and a private scratch buffer that
// stands in for shared memory. Fragments are plain values; every operation
// that the hardware would charge for goes through the Engine.
//
// Two API modes:
//   relaxed (default)  constant matrices are written straight into
//                      registers, broadcasts and lane reads skip memory
//   strict             only the stock load/store/fill/mma surface is used;
//                      anything else is routed through scratch memory

#include "tcu/counters.hpp"
#include "tcu/fragment.hpp"

#include <span>
#include <vector>

namespace tcu {

struct EngineOptions {
    bool strict_wmma = false;
};

class Engine {
public:
    explicit Engine(EngineOptions options = {});

    bool strict() const noexcept { return options_.strict_wmma; }
    const EngineOptions& options() const noexcept { return options_; }
    const CostCounters& counters() const noexcept { return counters_; }
    void reset_counters() noexcept { counters_ = {}; }

    // Lane-level element traffic done outside tile operations (output
    // writes by individual lanes, the scalar uniform-add loops).
    void record_element_loads(std::uint64_t n) noexcept { counters_.elements_loaded += n; }
    void record_element_stores(std::uint64_t n) noexcept { counters_.elements_stored += n; }

    template <typename S>
    Fragment<S> load_tile(std::span<const S> buffer, std::size_t offset, Layout layout,
                          std::size_t stride, FragmentKind kind,
                          TileShape shape = kTile16x16x16);

    template <typename S>
    void store_tile(const Fragment<S>& frag, std::span<S> buffer, std::size_t offset,
                    Layout layout, std::size_t stride);

    template <typename S>
    Fragment<S> fill(TileShape shape, FragmentKind kind, S value);

    // D = A.B + C. Products are exact, the sum with C is exact, and each
    // output element is rounded once to the accumulator precision.
    template <typename Acc>
    Fragment<Acc> mma(const HalfFragment& a, const HalfFragment& b, const Fragment<Acc>& c);

    // Constant operands. P has a first row of ones, U is upper triangular
    // (inclusive), L strictly lower triangular. The *T variants are the
    // transposes in the other operand slot.
    HalfFragment make_P(TileShape shape = kTile16x16x16);
    HalfFragment make_PT(TileShape shape = kTile16x16x16);
    HalfFragment make_U(TileShape shape = kTile16x16x16);
    HalfFragment make_L(TileShape shape = kTile16x16x16);
    HalfFragment make_LT(TileShape shape = kTile16x16x16);
    HalfFragment make_ones(FragmentKind kind, TileShape shape = kTile16x16x16);

    // Register-level extensions for 16x16 MatrixB fragments.
    void set_upper_triangular(HalfFragment& frag);
    std::vector<Half> get_first_column(const HalfFragment& frag);

    // Change fragment kind through a scratch store and load. The scalar
    // type may narrow (binary32 accumulator to a Half operand).
    template <typename To, typename From>
    Fragment<To> cast_kind(const Fragment<From>& frag, FragmentKind target);

    // Lane reads of accumulator values. Strict mode stores the tile to
    // scratch first.
    template <typename S>
    S extract(const Fragment<S>& frag, int r, int c);
    template <typename S>
    std::vector<S> extract_row(const Fragment<S>& frag, int r);
    template <typename S>
    std::vector<S> extract_column(const Fragment<S>& frag, int c);

    // Accumulator with every element equal to value.
    template <typename S>
    Fragment<S> broadcast(S value, TileShape shape = kTile16x16x16);

    // Accumulator whose row r is filled with per_row[r].
    template <typename S>
    Fragment<S> broadcast_rows(std::span<const S> per_row, TileShape shape = kTile16x16x16);

private:
    HalfFragment make_constant(FragmentKind kind, TileShape shape, bool (*pred)(int, int));

    template <typename S>
    std::vector<S>& scratch(std::size_t min_size);

    EngineOptions options_;
    CostCounters counters_;
    std::vector<Half> scratch_half_;
    std::vector<float> scratch_float_;
};

// Tiled D = A.B over matrices whose dimensions are padded up to the tile
// shape. The result keeps the accumulator precision.
template <typename Acc>
DenseMatrix<Acc> naive_tiled_matmul(Engine& engine, const DenseMatrix<Half>& a,
                                    const DenseMatrix<Half>& b,
                                    TileShape shape = kTile16x16x16);

} // namespace tcu

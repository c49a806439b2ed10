#pragma once

// Segmented reduction expressed as tensor-core MMAs.
//
// All warp primitives work on 16x16 tiles. P is the matrix with a first row
// of ones, so P.A leaves the column sums of A in row 0. Inputs are loaded
// column-major, which turns each run of 16 consecutive elements into one
// column. Acc is the accumulator precision (Half or float).
//
//   variant               MMAs
//   reduce_16             1 per tile of 16 segments
//   reduce_256            2
//   reduce_256n_efficient N + 1
//   reduce_256n_inefficient 2N
//   reduce_16n_strided    N per group of 16 segments
//   reduce_16n_coalesced  16*(N/16) + N%16 + 1 per group of 16 segments
//                         (N when N < 16, same as strided)

#include "tcu/launcher.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace tcu {

enum class ReduceVariant : std::uint8_t {
    Warp16,
    Warp256,
    Strided16N,
    Coalesced16N,
    WorkEfficient256N,
    WorkInefficient256N,
    Block256N,
    GridTwoPass,
};

std::string_view to_string(ReduceVariant v) noexcept;
bool parse_reduce_variant(std::string_view name, ReduceVariant& out) noexcept;

struct BlockConfig {
    int warps_per_block = 4;
    int coarsening = 1; // segments (or 16-segment groups) per warp task
};

void validate(const BlockConfig& cfg);

template <typename Acc = Half>
std::array<Acc, 16> reduce_16(std::span<const Half> input, Engine& engine);

template <typename Acc = Half>
Acc reduce_256(std::span<const Half> input, Engine& engine);

template <typename Acc = Half>
Acc reduce_256n_efficient(std::span<const Half> input, std::size_t n, Engine& engine);

template <typename Acc = Half>
Acc reduce_256n_inefficient(std::span<const Half> input, std::size_t n, Engine& engine);

// input holds whole groups of 16 contiguous segments of seg_size = 16N.
template <typename Acc = Half>
std::vector<Acc> reduce_16n_strided(std::span<const Half> input, std::size_t seg_size,
                                    Engine& engine);

template <typename Acc = Half>
std::vector<Acc> reduce_16n_coalesced(std::span<const Half> input, std::size_t seg_size,
                                      Engine& engine);

// One block per segment. seg_size must split into wpb slices of 256N.
// If warp_partials is given it receives the per-warp sums, wpb per segment.
template <typename Acc = Half>
std::vector<Acc> block_reduce_256n(std::span<const Half> input, std::size_t seg_size,
                                   const BlockConfig& cfg, Launcher& launcher,
                                   std::vector<Acc>* warp_partials = nullptr);

struct GridConfig {
    std::size_t chunk_tiles = 16; // 256-element tiles per first-pass partial
};

// Two launches: partial sums per chunk, then one reduction of the partials
// per segment. seg_size must be a multiple of 256.
template <typename Acc = Half>
std::vector<Acc> grid_reduce_segmented(std::span<const Half> input, std::size_t seg_size,
                                       Launcher& launcher, const GridConfig& cfg = {});

template <typename Acc = Half>
Acc grid_reduce(std::span<const Half> input, Launcher& launcher, const GridConfig& cfg = {});

// Length a segment of logical size seg_size is padded to under a variant.
std::size_t padded_segment_size(ReduceVariant v, std::size_t seg_size, const BlockConfig& cfg);

template <typename Acc>
struct ReduceResult {
    std::vector<Acc> sums; // one per logical segment
    std::size_t padded_seg_size = 0;
    std::size_t padded_elements = 0;
};

// Arbitrary-length segmented reduction: zero-pads the tail segment and each
// segment as the variant requires, then runs it across the launcher.
template <typename Acc = Half>
ReduceResult<Acc> segmented_reduce(std::span<const Half> input, std::size_t seg_size,
                                   ReduceVariant variant, const BlockConfig& cfg,
                                   Launcher& launcher);

} // namespace tcu

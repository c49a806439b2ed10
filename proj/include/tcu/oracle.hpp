#pragma once

// Scalar reference implementations and the shuffle-instruction warp baseline.

#include "tcu/half.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tcu {

enum class OracleMode : std::uint8_t {
    ExactWide,    // binary64 accumulation
    FaithfulHalf, // binary16 rounding after every add, left to right per segment
};

std::vector<double> oracle_segmented_reduce(std::span<const Half> input, std::size_t seg_size,
                                            OracleMode mode);

std::vector<double> oracle_segmented_scan(std::span<const Half> input, std::size_t seg_size,
                                          OracleMode mode, bool inclusive = true);

struct ShuffleCost {
    std::uint64_t shuffle_ops = 0; // warp-wide shuffle instructions
    std::uint64_t add_ops = 0;     // warp-wide adds
    std::uint64_t steps = 0;       // shuffle + add pairs

    static constexpr std::uint64_t kCyclesPerStep = 4;
    std::uint64_t cycles() const noexcept { return kCyclesPerStep * steps; }
};

inline constexpr std::size_t kShuffleLanes = 32;

// shfl_down tree, offsets 16, 8, 4, 2, 1; result is lane 0.
std::pair<Half, ShuffleCost> shuffle_warp_reduce(std::span<const Half> vals);

// Hillis-Steele scan with shfl_up, offsets 1, 2, 4, 8, 16.
std::pair<std::vector<Half>, ShuffleCost> shuffle_warp_scan(std::span<const Half> vals);

// Baseline cycles for reducing 256 elements in one warp with shuffles.
// A fixed constant; not derived from the step model above.
constexpr std::uint64_t shuffle_reduce_256_cost() noexcept { return 256; }

} // namespace tcu

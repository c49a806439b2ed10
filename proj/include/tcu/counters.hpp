#pragma once

#include <cstdint>
#include <iosfwd>

namespace tcu {

// Cycles charged per MMA on the 16x16x16 tile.
inline constexpr std::uint64_t kCyclesPerMma = 32;

struct CostCounters {
    std::uint64_t mma_count = 0;
    std::uint64_t tile_loads = 0;
    std::uint64_t tile_stores = 0;
    std::uint64_t fill_count = 0;
    std::uint64_t elements_loaded = 0;
    std::uint64_t elements_stored = 0;

    constexpr std::uint64_t cycle_estimate() const noexcept { return kCyclesPerMma * mma_count; }

    CostCounters& operator+=(const CostCounters& o) noexcept
    {
        mma_count += o.mma_count;
        tile_loads += o.tile_loads;
        tile_stores += o.tile_stores;
        fill_count += o.fill_count;
        elements_loaded += o.elements_loaded;
        elements_stored += o.elements_stored;
        return *this;
    }

    friend CostCounters operator+(CostCounters a, const CostCounters& b) noexcept { return a += b; }

    // Delta between two snapshots of the same monotone counter set.
    friend CostCounters operator-(const CostCounters& later, const CostCounters& earlier) noexcept
    {
        CostCounters d;
        d.mma_count = later.mma_count - earlier.mma_count;
        d.tile_loads = later.tile_loads - earlier.tile_loads;
        d.tile_stores = later.tile_stores - earlier.tile_stores;
        d.fill_count = later.fill_count - earlier.fill_count;
        d.elements_loaded = later.elements_loaded - earlier.elements_loaded;
        d.elements_stored = later.elements_stored - earlier.elements_stored;
        return d;
    }

    friend constexpr bool operator==(const CostCounters&, const CostCounters&) = default;
};

std::ostream& operator<<(std::ostream& os, const CostCounters& c);

} // namespace tcu

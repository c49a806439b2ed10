#pragma once

// Segmented inclusive scan expressed as tensor-core MMAs.
//
// A 256-element tile is loaded row-major (row r = elements 16r..16r+15).
// With U upper triangular and L strictly lower triangular:
//
//   A.U        inclusive scan of each row
//   L.A        exclusive scan of each column
//   L.A.1      G: every entry of row r = sum of rows above r
//   G + A.U    inclusive scan of the whole tile in row-major order
//
// scan_16 uses only the first identity (1 MMA); scan_256 uses all of them
// (3 MMAs). Longer segments carry the running total in an accumulator
// broadcast S.

#include "tcu/reduce.hpp"

#include <array>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace tcu {

enum class ScanVariant : std::uint8_t {
    Warp16,
    Warp256,
    Strided16N,
    Warp256N,
    Block256N,
    GridThreePass,
};

std::string_view to_string(ScanVariant v) noexcept;
bool parse_scan_variant(std::string_view name, ScanVariant& out) noexcept;

// 16 segments of 16, one per tile row.
template <typename Acc = Half>
std::vector<Acc> scan_16(std::span<const Half> input, Engine& engine);

template <typename Acc = Half>
std::vector<Acc> scan_256(std::span<const Half> input, Engine& engine);

template <typename Acc = Half>
std::vector<Acc> scan_256n(std::span<const Half> input, std::size_t n, Engine& engine);

// Called after each iteration of scan_16n with the iteration index and the
// per-row carry (last column of R) that is broadcast into S.
template <typename Acc>
using CarryObserver = std::function<void(std::size_t iteration, std::span<const Acc> carry)>;

// input holds whole groups of 16 contiguous segments of seg_size = 16N.
template <typename Acc = Half>
std::vector<Acc> scan_16n(std::span<const Half> input, std::size_t seg_size, Engine& engine,
                          const CarryObserver<Acc>& observer = {});

// Exclusive scan of the last column of e, plus carry:
//   out[j] = carry + sum_{i<j} e(i, 15)
template <typename Acc = Half>
std::array<Acc, 16> last_column_scan_16(const Fragment<Acc>& e, Engine& engine, Acc carry = Acc{});

// One block per segment; seg_size must be a multiple of 256 * wpb.
// If block_partials is given it receives the partials list of the first
// super-iteration of every block (wpb values each).
template <typename Acc = Half>
std::vector<Acc> block_scan_256n(std::span<const Half> input, std::size_t seg_size,
                                 const BlockConfig& cfg, Launcher& launcher,
                                 std::vector<Acc>* block_partials = nullptr);

struct GridScanConfig {
    std::size_t block_capacity = 1024; // elements scanned per block in pass 1
};

// Scan-then-propagate: block scans with per-block totals, a scan of the
// totals, then a uniform add. seg_size must be a multiple of the capacity.
template <typename Acc = Half>
std::vector<Acc> grid_scan(std::span<const Half> input, std::size_t seg_size, Launcher& launcher,
                           const GridScanConfig& cfg = {});

std::size_t padded_segment_size(ScanVariant v, std::size_t seg_size, const BlockConfig& cfg);

template <typename Acc>
struct ScanResult {
    std::vector<Acc> values; // same length as the input
    std::size_t padded_seg_size = 0;
    std::size_t padded_elements = 0;
};

template <typename Acc = Half>
ScanResult<Acc> segmented_scan(std::span<const Half> input, std::size_t seg_size,
                               ScanVariant variant, const BlockConfig& cfg, Launcher& launcher);

// Exclusive scan from an inclusive one: shift right by one within each
// segment and start every segment at zero.
template <typename T>
std::vector<T> exclusive_from_inclusive(std::span<const T> inclusive, std::size_t seg_size)
{
    std::vector<T> out(inclusive.size(), T{});
    for (std::size_t i = 0; i < inclusive.size(); ++i)
        if (i % seg_size != 0)
            out[i] = inclusive[i - 1];
    return out;
}

} // namespace tcu

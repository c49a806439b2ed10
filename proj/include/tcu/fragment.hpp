#pragma once

// Fragments: a warp's register-resident view of one MMA operand tile.
//
// Each fragment of an m x n matrix is spread over 32 lanes with
// m*n/32 slots per lane. The lane map is our own (hardware keeps it
// opaque) and differs per kind:
//
//   MatrixA      e = r * cols + c                 (row-major walk)
//   MatrixB      e = c * rows + r                 (column-major walk)
//   Accumulator  e = 16 * ((r/4) * (cols/4) + c/4) + 4 * (r%4) + c%4
//                                                  (4x4 blocks)
//   lane = e % 32, slot = e / 32
//
// Algorithms never rely on the map; it only has to be a bijection.

#include "tcu/error.hpp"
#include "tcu/half.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace Eigen {
template <>
struct NumTraits<tcu::Half> : GenericNumTraits<tcu::Half> {
    using Real = tcu::Half;
    using NonInteger = tcu::Half;
    using Nested = tcu::Half;
    using Literal = tcu::Half;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 0,
        ReadCost = 1,
        AddCost = 2,
        MulCost = 2,
    };
    static tcu::Half epsilon() { return std::numeric_limits<tcu::Half>::epsilon(); }
    static tcu::Half dummy_precision() { return tcu::Half::from_bits(0x2000); }
    static tcu::Half highest() { return std::numeric_limits<tcu::Half>::max(); }
    static tcu::Half lowest() { return std::numeric_limits<tcu::Half>::lowest(); }
    static int digits10() { return 3; }
};
} // namespace Eigen

namespace tcu {

inline constexpr int kWarpSize = 32;

enum class FragmentKind : std::uint8_t { MatrixA, MatrixB, Accumulator };
enum class Layout : std::uint8_t { RowMajor, ColMajor };

const char* to_string(FragmentKind kind) noexcept;
const char* to_string(Layout layout) noexcept;

struct TileShape {
    int m = 16;
    int n = 16;
    int k = 16;

    friend constexpr bool operator==(const TileShape&, const TileShape&) = default;

    constexpr int rows(FragmentKind kind) const noexcept
    {
        return kind == FragmentKind::MatrixB ? k : m;
    }
    constexpr int cols(FragmentKind kind) const noexcept
    {
        return kind == FragmentKind::MatrixA ? k : n;
    }
};

inline constexpr TileShape kTile16x16x16{16, 16, 16};
inline constexpr TileShape kTile32x8x16{32, 8, 16};
inline constexpr TileShape kTile8x32x16{8, 32, 16};

constexpr bool is_supported(const TileShape& s) noexcept
{
    return s == kTile16x16x16 || s == kTile32x8x16 || s == kTile8x32x16;
}

void require_supported(const TileShape& s);

struct LaneSlot {
    int lane;
    int slot;
};

LaneSlot lane_map(FragmentKind kind, int rows, int cols, int r, int c) noexcept;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
class Fragment {
public:
    using scalar_type = Scalar;

    Fragment(FragmentKind kind, TileShape shape);

    FragmentKind kind() const noexcept { return kind_; }
    const TileShape& shape() const noexcept { return shape_; }
    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    int size() const noexcept { return rows_ * cols_; }
    int slots_per_lane() const noexcept { return size() / kWarpSize; }

    // Element read-back through the lane map.
    Scalar operator()(int r, int c) const noexcept { return regs_[reg_index(r, c)]; }

    // Registers owned by one lane, in slot order.
    std::vector<Scalar> lane(int lane_id) const;

    DenseMatrix<Scalar> to_matrix() const;

private:
    friend class Engine;

    Scalar& at(int r, int c) noexcept { return regs_[reg_index(r, c)]; }
    std::size_t reg_index(int r, int c) const noexcept
    {
        const LaneSlot ls = lane_map(kind_, rows_, cols_, r, c);
        return static_cast<std::size_t>(ls.slot) * kWarpSize + static_cast<std::size_t>(ls.lane);
    }

    FragmentKind kind_;
    TileShape shape_;
    int rows_;
    int cols_;
    std::vector<Scalar> regs_; // slot-major: regs_[slot * 32 + lane]
};

using HalfFragment = Fragment<Half>;

extern template class Fragment<Half>;
extern template class Fragment<float>;

// Row-major decimal grid, one row per line.
template <typename Scalar>
std::string dump(const Fragment<Scalar>& frag);

} // namespace tcu

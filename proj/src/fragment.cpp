#include "tcu/fragment.hpp"
#include "tcu/counters.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace tcu {

const char* to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::OutOfBounds: return "OutOfBounds";
    case Errc::InvalidStride: return "InvalidStride";
    case Errc::WrongKind: return "WrongKind";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadLength: return "BadLength";
    case Errc::BadConfig: return "BadConfig";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

const char* to_string(FragmentKind kind) noexcept
{
    switch (kind) {
    case FragmentKind::MatrixA: return "matrix_a";
    case FragmentKind::MatrixB: return "matrix_b";
    case FragmentKind::Accumulator: return "accumulator";
    }
    return "?";
}

const char* to_string(Layout layout) noexcept
{
    return layout == Layout::RowMajor ? "row_major" : "col_major";
}

void require_supported(const TileShape& s)
{
    if (!is_supported(s)) {
        throw Error(Errc::ShapeMismatch, "unsupported tile shape <" + std::to_string(s.m) + "," +
                                             std::to_string(s.n) + "," + std::to_string(s.k) + ">");
    }
}

LaneSlot lane_map(FragmentKind kind, int rows, int cols, int r, int c) noexcept
{
    int e;
    switch (kind) {
    case FragmentKind::MatrixA:
        e = r * cols + c;
        break;
    case FragmentKind::MatrixB:
        e = c * rows + r;
        break;
    default:
        e = 16 * ((r / 4) * (cols / 4) + c / 4) + 4 * (r % 4) + c % 4;
        break;
    }
    return {e % kWarpSize, e / kWarpSize};
}

template <typename Scalar>
Fragment<Scalar>::Fragment(FragmentKind kind, TileShape shape)
    : kind_(kind), shape_(shape), rows_(shape.rows(kind)), cols_(shape.cols(kind))
{
    require_supported(shape);
    regs_.assign(static_cast<std::size_t>(rows_ * cols_), Scalar{});
}

template <typename Scalar>
std::vector<Scalar> Fragment<Scalar>::lane(int lane_id) const
{
    std::vector<Scalar> out;
    out.reserve(static_cast<std::size_t>(slots_per_lane()));
    for (int s = 0; s < slots_per_lane(); ++s)
        out.push_back(regs_[static_cast<std::size_t>(s * kWarpSize + lane_id)]);
    return out;
}

template <typename Scalar>
DenseMatrix<Scalar> Fragment<Scalar>::to_matrix() const
{
    DenseMatrix<Scalar> m(rows_, cols_);
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c)
            m(r, c) = (*this)(r, c);
    return m;
}

template class Fragment<Half>;
template class Fragment<float>;

template <typename Scalar>
std::string dump(const Fragment<Scalar>& frag)
{
    std::ostringstream os;
    for (int r = 0; r < frag.rows(); ++r) {
        for (int c = 0; c < frag.cols(); ++c) {
            if (c)
                os << ' ';
            if constexpr (std::is_same_v<Scalar, Half>)
                os << to_f32(frag(r, c));
            else
                os << frag(r, c);
        }
        os << '\n';
    }
    return os.str();
}

template std::string dump(const Fragment<Half>&);
template std::string dump(const Fragment<float>&);

std::ostream& operator<<(std::ostream& os, const CostCounters& c)
{
    return os << "mma=" << c.mma_count << " tile_loads=" << c.tile_loads
              << " tile_stores=" << c.tile_stores << " fills=" << c.fill_count
              << " elements_loaded=" << c.elements_loaded
              << " elements_stored=" << c.elements_stored << " cycles=" << c.cycle_estimate();
}

} // namespace tcu

#include "tcu/engine.hpp"

#include "exact_sum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <type_traits>

namespace tcu {

namespace {

template <typename To, typename From>
To convert(From v) noexcept
{
    if constexpr (std::is_same_v<To, From>)
        return v;
    else if constexpr (std::is_same_v<To, Half>)
        return from_f32(v);
    else
        return to_f32(v);
}

template <typename S>
double widen(S v) noexcept
{
    if constexpr (std::is_same_v<S, Half>)
        return to_f64(v);
    else
        return static_cast<double>(v);
}

template <typename S>
bool finite(S v) noexcept
{
    if constexpr (std::is_same_v<S, Half>)
        return v.is_finite();
    else
        return std::isfinite(v);
}

std::size_t element_offset(Layout layout, std::size_t offset, std::size_t stride, int r, int c)
{
    const auto ur = static_cast<std::size_t>(r);
    const auto uc = static_cast<std::size_t>(c);
    return layout == Layout::RowMajor ? offset + ur * stride + uc : offset + uc * stride + ur;
}

void check_addressing(std::size_t buffer_size, std::size_t offset, Layout layout, std::size_t stride,
                      int rows, int cols)
{
    const auto min_stride = static_cast<std::size_t>(layout == Layout::RowMajor ? cols : rows);
    if (stride < min_stride) {
        throw Error(Errc::InvalidStride, "stride " + std::to_string(stride) + " < " +
                                             std::to_string(min_stride) + " for " +
                                             to_string(layout));
    }
    const std::size_t last = element_offset(layout, offset, stride, rows - 1, cols - 1);
    if (last >= buffer_size) {
        throw Error(Errc::OutOfBounds, "index " + std::to_string(last) + " >= buffer size " +
                                           std::to_string(buffer_size));
    }
}

bool pred_P(int r, int) { return r == 0; }
bool pred_PT(int, int c) { return c == 0; }
bool pred_U(int r, int c) { return r <= c; }
bool pred_L(int r, int c) { return r > c; }
bool pred_LT(int r, int c) { return r < c; }

} // namespace

Engine::Engine(EngineOptions options) : options_(options) {}

template <typename S>
std::vector<S>& Engine::scratch(std::size_t min_size)
{
    std::vector<S>* buf;
    if constexpr (std::is_same_v<S, Half>)
        buf = &scratch_half_;
    else
        buf = &scratch_float_;
    if (buf->size() < min_size)
        buf->resize(min_size);
    return *buf;
}

template <typename S>
Fragment<S> Engine::load_tile(std::span<const S> buffer, std::size_t offset, Layout layout,
                              std::size_t stride, FragmentKind kind, TileShape shape)
{
    require_supported(shape);
    if (kind != FragmentKind::Accumulator && !std::is_same_v<S, Half>)
        throw Error(Errc::WrongKind, std::string(to_string(kind)) + " fragments hold binary16 only");

    Fragment<S> frag(kind, shape);
    check_addressing(buffer.size(), offset, layout, stride, frag.rows(), frag.cols());
    for (int r = 0; r < frag.rows(); ++r)
        for (int c = 0; c < frag.cols(); ++c)
            frag.at(r, c) = buffer[element_offset(layout, offset, stride, r, c)];

    ++counters_.tile_loads;
    counters_.elements_loaded += static_cast<std::uint64_t>(frag.size());
    return frag;
}

template <typename S>
void Engine::store_tile(const Fragment<S>& frag, std::span<S> buffer, std::size_t offset,
                        Layout layout, std::size_t stride)
{
    if (frag.kind() != FragmentKind::Accumulator)
        throw Error(Errc::WrongKind, std::string("cannot store a ") + to_string(frag.kind()));
    check_addressing(buffer.size(), offset, layout, stride, frag.rows(), frag.cols());
    for (int r = 0; r < frag.rows(); ++r)
        for (int c = 0; c < frag.cols(); ++c)
            buffer[element_offset(layout, offset, stride, r, c)] = frag(r, c);

    ++counters_.tile_stores;
    counters_.elements_stored += static_cast<std::uint64_t>(frag.size());
}

template <typename S>
Fragment<S> Engine::fill(TileShape shape, FragmentKind kind, S value)
{
    if (kind != FragmentKind::Accumulator && !std::is_same_v<S, Half>)
        throw Error(Errc::WrongKind, std::string(to_string(kind)) + " fragments hold binary16 only");
    Fragment<S> frag(kind, shape);
    std::fill(frag.regs_.begin(), frag.regs_.end(), value);
    ++counters_.fill_count;
    return frag;
}

template <typename Acc>
Fragment<Acc> Engine::mma(const HalfFragment& a, const HalfFragment& b, const Fragment<Acc>& c)
{
    if (a.kind() != FragmentKind::MatrixA || b.kind() != FragmentKind::MatrixB ||
        c.kind() != FragmentKind::Accumulator) {
        throw Error(Errc::WrongKind, std::string("mma operands are ") + to_string(a.kind()) + ", " +
                                         to_string(b.kind()) + ", " + to_string(c.kind()));
    }
    if (!(a.shape() == b.shape()) || !(a.shape() == c.shape()))
        throw Error(Errc::ShapeMismatch, "mma operands disagree on tile shape");

    const int m = a.shape().m;
    const int n = a.shape().n;
    const int k = a.shape().k;

    // Operands as integers scaled by 2^24; products are then scaled by 2^48.
    // every supported shape has at most 512 operand elements and 32 rows/cols
    std::array<std::int64_t, 512> fa{};
    std::array<std::int64_t, 512> fb{};
    std::array<char, 32> row_ok;
    std::array<char, 32> col_ok;
    row_ok.fill(1);
    col_ok.fill(1);
    for (int r = 0; r < m; ++r) {
        for (int i = 0; i < k; ++i) {
            const Half v = a(r, i);
            if (!v.is_finite())
                row_ok[static_cast<std::size_t>(r)] = 0;
            else
                fa[static_cast<std::size_t>(r * k + i)] = detail::half_to_fixed24(v);
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int col = 0; col < n; ++col) {
            const Half v = b(i, col);
            if (!v.is_finite())
                col_ok[static_cast<std::size_t>(col)] = 0;
            else
                fb[static_cast<std::size_t>(i * n + col)] = detail::half_to_fixed24(v);
        }
    }

    Fragment<Acc> d(FragmentKind::Accumulator, c.shape());
    for (int r = 0; r < m; ++r) {
        for (int col = 0; col < n; ++col) {
            const Acc cv = c(r, col);
            if (!row_ok[static_cast<std::size_t>(r)] || !col_ok[static_cast<std::size_t>(col)] ||
                !finite(cv)) {
                // IEEE special values: inf/NaN propagation, no exactness to preserve
                double sum = widen(cv);
                for (int i = 0; i < k; ++i)
                    sum += to_f64(a(r, i)) * to_f64(b(i, col));
                if constexpr (std::is_same_v<Acc, Half>)
                    d.at(r, col) = from_f64(sum);
                else
                    d.at(r, col) = static_cast<float>(sum);
                continue;
            }

            detail::i128 dot = 0;
            for (int i = 0; i < k; ++i) {
                dot += static_cast<detail::i128>(fa[static_cast<std::size_t>(r * k + i)]) *
                       fb[static_cast<std::size_t>(i * n + col)];
            }
            if constexpr (std::is_same_v<Acc, Half>) {
                dot += static_cast<detail::i128>(detail::half_to_fixed24(cv)) * (std::int64_t{1} << 24);
                d.at(r, col) = from_f64(detail::round_scaled({dot, -48}, 11, -14, 15));
            } else {
                const detail::Scaled total =
                    detail::add_scaled({dot, -48}, detail::float_to_scaled(cv));
                d.at(r, col) = static_cast<float>(detail::round_scaled(total, 24, -126, 127));
            }
        }
    }

    ++counters_.mma_count;
    return d;
}

HalfFragment Engine::make_constant(FragmentKind kind, TileShape shape, bool (*pred)(int, int))
{
    require_supported(shape);
    const int rows = shape.rows(kind);
    const int cols = shape.cols(kind);

    if (!strict()) {
        HalfFragment frag(kind, shape);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                frag.at(r, c) = pred(r, c) ? kHalfOne : kHalfZero;
        ++counters_.fill_count;
        return frag;
    }

    // Stock API: stage the constant in memory, then load it.
    auto& buf = scratch<Half>(static_cast<std::size_t>(rows * cols));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            buf[static_cast<std::size_t>(r * cols + c)] = pred(r, c) ? kHalfOne : kHalfZero;
    counters_.elements_stored += static_cast<std::uint64_t>(rows * cols);
    return load_tile<Half>(buf, 0, Layout::RowMajor, static_cast<std::size_t>(cols), kind, shape);
}

HalfFragment Engine::make_P(TileShape shape) { return make_constant(FragmentKind::MatrixA, shape, pred_P); }
HalfFragment Engine::make_PT(TileShape shape) { return make_constant(FragmentKind::MatrixB, shape, pred_PT); }
HalfFragment Engine::make_U(TileShape shape) { return make_constant(FragmentKind::MatrixB, shape, pred_U); }
HalfFragment Engine::make_L(TileShape shape) { return make_constant(FragmentKind::MatrixA, shape, pred_L); }
HalfFragment Engine::make_LT(TileShape shape) { return make_constant(FragmentKind::MatrixB, shape, pred_LT); }

HalfFragment Engine::make_ones(FragmentKind kind, TileShape shape)
{
    return make_constant(kind, shape, [](int, int) { return true; });
}

void Engine::set_upper_triangular(HalfFragment& frag)
{
    if (frag.kind() != FragmentKind::MatrixB || !(frag.shape() == kTile16x16x16))
        throw Error(Errc::WrongKind, "set_upper_triangular needs a 16x16 matrix_b fragment");
    for (int r = 0; r < frag.rows(); ++r)
        for (int c = 0; c < frag.cols(); ++c)
            frag.at(r, c) = r <= c ? kHalfOne : kHalfZero;
    ++counters_.fill_count;
}

std::vector<Half> Engine::get_first_column(const HalfFragment& frag)
{
    if (frag.kind() != FragmentKind::MatrixB || !(frag.shape() == kTile16x16x16))
        throw Error(Errc::WrongKind, "get_first_column needs a 16x16 matrix_b fragment");
    std::vector<Half> out(static_cast<std::size_t>(frag.rows()));
    for (int r = 0; r < frag.rows(); ++r)
        out[static_cast<std::size_t>(r)] = frag(r, 0);
    counters_.elements_stored += out.size();
    return out;
}

template <typename To, typename From>
Fragment<To> Engine::cast_kind(const Fragment<From>& frag, FragmentKind target)
{
    const TileShape shape = frag.shape();
    if (shape.rows(target) != frag.rows() || shape.cols(target) != frag.cols()) {
        throw Error(Errc::ShapeMismatch, std::string("cannot cast ") + to_string(frag.kind()) +
                                             " to " + to_string(target) + " for this tile shape");
    }
    if (target != FragmentKind::Accumulator && !std::is_same_v<To, Half>)
        throw Error(Errc::WrongKind, std::string(to_string(target)) + " fragments hold binary16 only");

    const auto size = static_cast<std::size_t>(frag.size());
    const auto cols = static_cast<std::size_t>(frag.cols());

    auto& src = scratch<From>(size);
    for (int r = 0; r < frag.rows(); ++r)
        for (int c = 0; c < frag.cols(); ++c)
            src[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)] = frag(r, c);
    ++counters_.tile_stores;
    counters_.elements_stored += size;

    if constexpr (std::is_same_v<To, From>) {
        return load_tile<To>(src, 0, Layout::RowMajor, cols, target, shape);
    } else {
        auto& dst = scratch<To>(size);
        for (std::size_t i = 0; i < size; ++i)
            dst[i] = convert<To>(src[i]);
        return load_tile<To>(dst, 0, Layout::RowMajor, cols, target, shape);
    }
}

template <typename S>
S Engine::extract(const Fragment<S>& frag, int r, int c)
{
    if (strict()) {
        auto& buf = scratch<S>(static_cast<std::size_t>(frag.size()));
        store_tile<S>(frag, buf, 0, Layout::RowMajor, static_cast<std::size_t>(frag.cols()));
        counters_.elements_loaded += 1;
        return buf[static_cast<std::size_t>(r * frag.cols() + c)];
    }
    return frag(r, c);
}

template <typename S>
std::vector<S> Engine::extract_row(const Fragment<S>& frag, int r)
{
    std::vector<S> out(static_cast<std::size_t>(frag.cols()));
    if (strict()) {
        auto& buf = scratch<S>(static_cast<std::size_t>(frag.size()));
        store_tile<S>(frag, buf, 0, Layout::RowMajor, static_cast<std::size_t>(frag.cols()));
        for (int c = 0; c < frag.cols(); ++c)
            out[static_cast<std::size_t>(c)] = buf[static_cast<std::size_t>(r * frag.cols() + c)];
        counters_.elements_loaded += out.size();
        return out;
    }
    for (int c = 0; c < frag.cols(); ++c)
        out[static_cast<std::size_t>(c)] = frag(r, c);
    return out;
}

template <typename S>
std::vector<S> Engine::extract_column(const Fragment<S>& frag, int c)
{
    std::vector<S> out(static_cast<std::size_t>(frag.rows()));
    if (strict()) {
        auto& buf = scratch<S>(static_cast<std::size_t>(frag.size()));
        store_tile<S>(frag, buf, 0, Layout::RowMajor, static_cast<std::size_t>(frag.cols()));
        for (int r = 0; r < frag.rows(); ++r)
            out[static_cast<std::size_t>(r)] = buf[static_cast<std::size_t>(r * frag.cols() + c)];
        counters_.elements_loaded += out.size();
        return out;
    }
    for (int r = 0; r < frag.rows(); ++r)
        out[static_cast<std::size_t>(r)] = frag(r, c);
    return out;
}

template <typename S>
Fragment<S> Engine::broadcast(S value, TileShape shape)
{
    return fill<S>(shape, FragmentKind::Accumulator, value);
}

template <typename S>
Fragment<S> Engine::broadcast_rows(std::span<const S> per_row, TileShape shape)
{
    require_supported(shape);
    const int rows = shape.m;
    const int cols = shape.n;
    if (per_row.size() != static_cast<std::size_t>(rows))
        throw Error(Errc::BadLength, "broadcast_rows needs one value per row");

    if (!strict()) {
        Fragment<S> frag(FragmentKind::Accumulator, shape);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                frag.at(r, c) = per_row[static_cast<std::size_t>(r)];
        ++counters_.fill_count;
        return frag;
    }

    auto& buf = scratch<S>(static_cast<std::size_t>(rows * cols));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            buf[static_cast<std::size_t>(r * cols + c)] = per_row[static_cast<std::size_t>(r)];
    counters_.elements_stored += static_cast<std::uint64_t>(rows * cols);
    return load_tile<S>(buf, 0, Layout::RowMajor, static_cast<std::size_t>(cols),
                        FragmentKind::Accumulator, shape);
}

template <typename Acc>
DenseMatrix<Acc> naive_tiled_matmul(Engine& engine, const DenseMatrix<Half>& a,
                                    const DenseMatrix<Half>& b, TileShape shape)
{
    require_supported(shape);
    if (a.cols() != b.rows())
        throw Error(Errc::ShapeMismatch, "inner dimensions differ");

    auto round_up = [](Eigen::Index v, int t) { return (v + t - 1) / t * t; };
    const Eigen::Index rows = round_up(a.rows(), shape.m);
    const Eigen::Index inner = round_up(a.cols(), shape.k);
    const Eigen::Index cols = round_up(b.cols(), shape.n);

    DenseMatrix<Half> ap(rows, inner);
    ap.setConstant(kHalfZero);
    ap.topLeftCorner(a.rows(), a.cols()) = a;
    DenseMatrix<Half> bp(inner, cols);
    bp.setConstant(kHalfZero);
    bp.topLeftCorner(b.rows(), b.cols()) = b;
    DenseMatrix<Acc> dp(rows, cols);
    dp.setConstant(Acc{});

    // Eigen storage is column-major, so every tile is a ColMajor load with
    // the padded row count as leading dimension.
    const std::span<const Half> abuf(ap.data(), static_cast<std::size_t>(ap.size()));
    const std::span<const Half> bbuf(bp.data(), static_cast<std::size_t>(bp.size()));
    const std::span<Acc> dbuf(dp.data(), static_cast<std::size_t>(dp.size()));
    const auto lda = static_cast<std::size_t>(rows);
    const auto ldb = static_cast<std::size_t>(inner);

    for (Eigen::Index i = 0; i < rows; i += shape.m) {
        for (Eigen::Index j = 0; j < cols; j += shape.n) {
            auto acc = engine.fill<Acc>(shape, FragmentKind::Accumulator, Acc{});
            for (Eigen::Index p = 0; p < inner; p += shape.k) {
                const auto at = engine.load_tile<Half>(abuf, static_cast<std::size_t>(p) * lda + static_cast<std::size_t>(i),
                                                       Layout::ColMajor, lda, FragmentKind::MatrixA, shape);
                const auto bt = engine.load_tile<Half>(bbuf, static_cast<std::size_t>(j) * ldb + static_cast<std::size_t>(p),
                                                       Layout::ColMajor, ldb, FragmentKind::MatrixB, shape);
                acc = engine.mma(at, bt, acc);
            }
            engine.store_tile<Acc>(acc, dbuf, static_cast<std::size_t>(j) * lda + static_cast<std::size_t>(i),
                                   Layout::ColMajor, lda);
        }
    }
    return dp.topLeftCorner(a.rows(), b.cols());
}

#define TCU_INSTANTIATE_ENGINE(S)                                                                 \
    template Fragment<S> Engine::load_tile<S>(std::span<const S>, std::size_t, Layout,            \
                                              std::size_t, FragmentKind, TileShape);              \
    template void Engine::store_tile<S>(const Fragment<S>&, std::span<S>, std::size_t, Layout,    \
                                        std::size_t);                                             \
    template Fragment<S> Engine::fill<S>(TileShape, FragmentKind, S);                             \
    template Fragment<S> Engine::mma<S>(const HalfFragment&, const HalfFragment&,                 \
                                        const Fragment<S>&);                                      \
    template S Engine::extract<S>(const Fragment<S>&, int, int);                                  \
    template std::vector<S> Engine::extract_row<S>(const Fragment<S>&, int);                      \
    template std::vector<S> Engine::extract_column<S>(const Fragment<S>&, int);                   \
    template Fragment<S> Engine::broadcast<S>(S, TileShape);                                      \
    template Fragment<S> Engine::broadcast_rows<S>(std::span<const S>, TileShape);                \
    template DenseMatrix<S> naive_tiled_matmul<S>(Engine&, const DenseMatrix<Half>&,              \
                                                  const DenseMatrix<Half>&, TileShape);

TCU_INSTANTIATE_ENGINE(Half)
TCU_INSTANTIATE_ENGINE(float)

#undef TCU_INSTANTIATE_ENGINE

template Fragment<Half> Engine::cast_kind<Half, Half>(const Fragment<Half>&, FragmentKind);
template Fragment<Half> Engine::cast_kind<Half, float>(const Fragment<float>&, FragmentKind);
template Fragment<float> Engine::cast_kind<float, float>(const Fragment<float>&, FragmentKind);
template Fragment<float> Engine::cast_kind<float, Half>(const Fragment<Half>&, FragmentKind);

} // namespace tcu

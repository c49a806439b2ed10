#include "tcu/engine.hpp"
#include "tcu/error.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>
#include <set>

using namespace tcu;
using Md = Eigen::MatrixXd;

namespace {

std::vector<Half> to_row_major(const Md& m)
{
    std::vector<Half> v(static_cast<std::size_t>(m.size()));
    for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c)
            v[static_cast<std::size_t>(r * m.cols() + c)] = from_f64(m(r, c));
    return v;
}

Md random_ints(int rows, int cols, int lo, int hi, std::mt19937& rng)
{
    std::uniform_int_distribution<int> d(lo, hi);
    Md m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            m(r, c) = d(rng);
    return m;
}

template <typename S>
Md to_double(const Fragment<S>& f)
{
    Md m(f.rows(), f.cols());
    for (int r = 0; r < f.rows(); ++r)
        for (int c = 0; c < f.cols(); ++c) {
            if constexpr (std::is_same_v<S, Half>)
                m(r, c) = to_f64(f(r, c));
            else
                m(r, c) = f(r, c);
        }
    return m;
}

} // namespace

TEST_CASE("lane map is a bijection onto 32 lanes")
{
    for (auto shape : {kTile16x16x16, kTile32x8x16, kTile8x32x16}) {
        for (auto kind : {FragmentKind::MatrixA, FragmentKind::MatrixB, FragmentKind::Accumulator}) {
            const int rows = shape.rows(kind), cols = shape.cols(kind);
            std::set<std::pair<int, int>> seen;
            std::set<int> lanes;
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    const auto ls = lane_map(kind, rows, cols, r, c);
                    REQUIRE(ls.lane >= 0);
                    REQUIRE(ls.lane < kWarpSize);
                    REQUIRE(ls.slot < rows * cols / kWarpSize);
                    seen.insert({ls.lane, ls.slot});
                    lanes.insert(ls.lane);
                }
            CHECK(seen.size() == static_cast<std::size_t>(rows * cols));
            CHECK(lanes.size() == static_cast<std::size_t>(kWarpSize));
        }
    }
}

TEST_CASE("load and store round-trip in both layouts")
{
    Engine eng;
    std::vector<float> buf(40 * 40);
    for (std::size_t i = 0; i < buf.size(); ++i)
        buf[i] = static_cast<float>(i);
    for (auto shape : {kTile16x16x16, kTile32x8x16, kTile8x32x16}) {
        for (auto layout : {Layout::RowMajor, Layout::ColMajor}) {
            const auto f = eng.load_tile<float>(buf, 3, layout, 40, FragmentKind::Accumulator, shape);
            for (int r = 0; r < f.rows(); ++r)
                for (int c = 0; c < f.cols(); ++c) {
                    const std::size_t idx = layout == Layout::RowMajor ? 3 + r * 40 + c : 3 + c * 40 + r;
                    REQUIRE(f(r, c) == buf[idx]);
                }
            std::vector<float> out(buf.size(), -1.0f);
            eng.store_tile<float>(f, out, 3, layout, 40);
            for (int r = 0; r < f.rows(); ++r)
                for (int c = 0; c < f.cols(); ++c) {
                    const std::size_t idx = layout == Layout::RowMajor ? 3 + r * 40 + c : 3 + c * 40 + r;
                    REQUIRE(out[idx] == buf[idx]);
                }
        }
    }
    CHECK(eng.counters().tile_loads == 6);
    CHECK(eng.counters().tile_stores == 6);
}

TEST_CASE("tile access errors")
{
    Engine eng;
    std::vector<Half> buf(256);
    CHECK_THROWS_AS(eng.load_tile<Half>(buf, 1, Layout::RowMajor, 16, FragmentKind::MatrixA), Error);
    CHECK_THROWS_AS(eng.load_tile<Half>(buf, 0, Layout::RowMajor, 15, FragmentKind::MatrixA), Error);
    try {
        eng.load_tile<Half>(buf, 0, Layout::ColMajor, 8, FragmentKind::MatrixA);
        FAIL("expected InvalidStride");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvalidStride);
    }
    try {
        eng.load_tile<Half>(buf, 16, Layout::RowMajor, 16, FragmentKind::MatrixB);
        FAIL("expected OutOfBounds");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::OutOfBounds);
    }
    const auto a = eng.load_tile<Half>(buf, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    try {
        eng.store_tile<Half>(a, buf, 0, Layout::RowMajor, 16);
        FAIL("expected WrongKind");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::WrongKind);
    }
    std::vector<float> fbuf(256);
    CHECK_THROWS_AS(eng.load_tile<float>(fbuf, 0, Layout::RowMajor, 16, FragmentKind::MatrixA), Error);
    CHECK_THROWS_AS(eng.mma(a, a, eng.fill<Half>(kTile16x16x16, FragmentKind::Accumulator, kHalfZero)), Error);
    CHECK_THROWS_AS(eng.load_tile<Half>(buf, 0, Layout::RowMajor, 16, FragmentKind::MatrixA, TileShape{16, 16, 8}),
                    Error);
}

TEST_CASE("constant operands")
{
    Engine eng;
    const Md p = to_double(eng.make_P());
    const Md pt = to_double(eng.make_PT());
    const Md u = to_double(eng.make_U());
    const Md l = to_double(eng.make_L());
    const Md lt = to_double(eng.make_LT());
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
            CHECK(p(r, c) == (r == 0 ? 1 : 0));
            CHECK(u(r, c) == (r <= c ? 1 : 0));
            CHECK(l(r, c) == (r > c ? 1 : 0));
        }
    CHECK(pt == p.transpose());
    CHECK(lt == l.transpose());
    CHECK(eng.counters().fill_count == 5);
    CHECK(eng.make_P().kind() == FragmentKind::MatrixA);
    CHECK(eng.make_U().kind() == FragmentKind::MatrixB);
    CHECK(eng.make_L().kind() == FragmentKind::MatrixA);
}

TEST_CASE("mma matches a dense product on every shape")
{
    std::mt19937 rng(3);
    Engine eng;
    for (auto shape : {kTile16x16x16, kTile32x8x16, kTile8x32x16}) {
        for (int trial = 0; trial < 50; ++trial) {
            const Md a = random_ints(shape.m, shape.k, -8, 8, rng);
            const Md b = random_ints(shape.k, shape.n, -8, 8, rng);
            const Md c = random_ints(shape.m, shape.n, -100, 100, rng);
            const auto fa = eng.load_tile<Half>(to_row_major(a), 0, Layout::RowMajor, shape.k,
                                                FragmentKind::MatrixA, shape);
            const auto fb = eng.load_tile<Half>(to_row_major(b), 0, Layout::RowMajor, shape.n,
                                                FragmentKind::MatrixB, shape);
            const auto cv = to_row_major(c);
            const auto fc = eng.load_tile<Half>(cv, 0, Layout::RowMajor, shape.n, FragmentKind::Accumulator, shape);
            REQUIRE(to_double(eng.mma(fa, fb, fc)) == a * b + c);
            std::vector<float> cf(cv.size());
            for (std::size_t i = 0; i < cv.size(); ++i)
                cf[i] = to_f32(cv[i]);
            const auto fcf = eng.load_tile<float>(cf, 0, Layout::RowMajor, shape.n, FragmentKind::Accumulator, shape);
            REQUIRE(to_double(eng.mma(fa, fb, fcf)) == a * b + c);
        }
    }
    CHECK(eng.counters().mma_count == 300);
    CHECK(eng.counters().cycle_estimate() == 300 * kCyclesPerMma);
}

TEST_CASE("mma rounds once per output element")
{
    Engine eng;
    // row 0 of A times column 0 of B: 2048 + 1 + 1 = 2050 is representable,
    // while left-to-right binary16 adds would stall at 2048
    std::vector<Half> a(256, kHalfZero), b(256, kHalfZero);
    a[0] = from_f64(2048);
    a[1] = kHalfOne;
    a[2] = kHalfOne;
    for (int r = 0; r < 16; ++r)
        b[static_cast<std::size_t>(r * 16)] = kHalfOne;
    const auto fa = eng.load_tile<Half>(a, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    const auto fb = eng.load_tile<Half>(b, 0, Layout::RowMajor, 16, FragmentKind::MatrixB);
    const auto zero = eng.fill<Half>(kTile16x16x16, FragmentKind::Accumulator, kHalfZero);
    CHECK(to_f64(eng.mma(fa, fb, zero)(0, 0)) == 2050);
    CHECK(to_f64(add(add(from_f64(2048), kHalfOne), kHalfOne)) == 2048);

    // the tie 2048 + 1 rounds to even once the full sum is known
    a[2] = kHalfZero;
    const auto fa2 = eng.load_tile<Half>(a, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    CHECK(to_f64(eng.mma(fa2, fb, zero)(0, 0)) == 2048);

    // tiny terms that would vanish individually still move a float sum
    std::vector<Half> c(256, kHalfZero);
    a.assign(256, kHalfZero);
    a[0] = kHalfOne;
    for (int k = 1; k < 16; ++k)
        a[static_cast<std::size_t>(k)] = Half::from_bits(0x0C00); // 2^-12
    const auto fa3 = eng.load_tile<Half>(a, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    const auto fzero = eng.fill<float>(kTile16x16x16, FragmentKind::Accumulator, 0.0f);
    CHECK(eng.mma(fa3, fb, fzero)(0, 0) == 1.0f + 15.0f * std::ldexp(1.0f, -12));
    CHECK(to_f64(eng.mma(fa3, fb, zero)(0, 0)) == 1.0 + std::ldexp(1.0, -10) * 4);
}

TEST_CASE("mma propagates non-finite values")
{
    Engine eng;
    std::vector<Half> a(256, kHalfOne), b(256, kHalfOne);
    a[0] = kHalfInf;
    const auto fa = eng.load_tile<Half>(a, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    const auto fb = eng.load_tile<Half>(b, 0, Layout::RowMajor, 16, FragmentKind::MatrixB);
    const auto r = eng.mma(fa, fb, eng.fill<Half>(kTile16x16x16, FragmentKind::Accumulator, kHalfZero));
    CHECK(r(0, 0).is_inf());
    CHECK(to_f64(r(1, 0)) == 16);
    std::vector<Half> big(256, kHalfMax);
    const auto fbig = eng.load_tile<Half>(big, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    CHECK(eng.mma(fbig, fb, eng.fill<Half>(kTile16x16x16, FragmentKind::Accumulator, kHalfZero))(3, 3).is_inf());
    CHECK(std::isfinite(eng.mma(fbig, fb, eng.fill<float>(kTile16x16x16, FragmentKind::Accumulator, 0.0f))(3, 3)));
}

TEST_CASE("matrix identities on integer tiles")
{
    std::mt19937 rng(1234);
    Md u = Md::Zero(16, 16), l = Md::Zero(16, 16);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) {
            u(r, c) = r <= c;
            l(r, c) = r > c;
        }
    const Md ones = Md::Ones(16, 16);
    for (int trial = 0; trial < 200; ++trial) {
        Engine eng;
        const Md a = random_ints(16, 16, 0, 7, rng);
        const auto v = to_row_major(a);
        const auto fa = eng.load_tile<Half>(v, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
        const auto fb = eng.load_tile<Half>(v, 0, Layout::RowMajor, 16, FragmentKind::MatrixB);
        const auto zero = eng.fill<Half>(kTile16x16x16, FragmentKind::Accumulator, kHalfZero);
        const auto au = eng.mma(fa, eng.make_U(), zero);
        const auto la = eng.mma(eng.make_L(), fb, zero);
        const auto g = eng.mma(eng.cast_kind<Half>(la, FragmentKind::MatrixA), eng.make_ones(FragmentKind::MatrixB), zero);
        const auto scan = eng.mma(eng.cast_kind<Half>(la, FragmentKind::MatrixA), eng.make_ones(FragmentKind::MatrixB), au);
        REQUIRE(to_double(au) == a * u);
        REQUIRE(to_double(la) == l * a);
        REQUIRE(to_double(g) == l * a * ones);
        REQUIRE(to_double(scan) == l * a * ones + a * u);
    }
}

TEST_CASE("extensions and casts")
{
    Engine eng;
    std::vector<Half> v(256);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = from_f64(static_cast<double>(i % 7));
    auto b = eng.load_tile<Half>(v, 0, Layout::RowMajor, 16, FragmentKind::MatrixB);
    const auto col = eng.get_first_column(b);
    REQUIRE(col.size() == 16);
    for (int r = 0; r < 16; ++r)
        CHECK(col[static_cast<std::size_t>(r)].bits() == v[static_cast<std::size_t>(16 * r)].bits());
    eng.set_upper_triangular(b);
    CHECK(to_double(b) == to_double(eng.make_U()));
    auto a = eng.load_tile<Half>(v, 0, Layout::RowMajor, 16, FragmentKind::MatrixA);
    try {
        eng.set_upper_triangular(a);
        FAIL("expected WrongKind");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::WrongKind);
    }

    std::vector<float> f(256);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = static_cast<float>(i) + 0.25f;
    const auto acc = eng.load_tile<float>(f, 0, Layout::RowMajor, 16, FragmentKind::Accumulator);
    const auto before = eng.counters();
    const auto ha = eng.cast_kind<Half>(acc, FragmentKind::MatrixA);
    const auto d = eng.counters() - before;
    CHECK(d.tile_stores == 1);
    CHECK(d.tile_loads == 1);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c)
            CHECK(ha(r, c).bits() == from_f32(acc(r, c)).bits());
}

TEST_CASE("strict mode routes through memory with identical values")
{
    Engine relaxed, strict({true});
    std::vector<float> f(256);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = static_cast<float>(i);
    for (Engine* e : {&relaxed, &strict}) {
        const auto acc = e->load_tile<float>(f, 0, Layout::RowMajor, 16, FragmentKind::Accumulator);
        CHECK(e->extract(acc, 3, 5) == 53.0f);
        const auto row = e->extract_row(acc, 2);
        const auto col = e->extract_column(acc, 15);
        CHECK(row[4] == 36.0f);
        CHECK(col[1] == 31.0f);
        const auto bc = e->broadcast(7.0f);
        CHECK(bc(9, 9) == 7.0f);
        const auto br = e->broadcast_rows<float>(col);
        CHECK(br(4, 0) == 79.0f);
        CHECK(br(4, 15) == 79.0f);
        CHECK(to_double(e->make_U()) == to_double(relaxed.make_U()));
    }
    const auto& rc = relaxed.counters();
    const auto& sc = strict.counters();
    CHECK(rc.tile_loads == 1);
    CHECK(rc.tile_stores == 0);
    CHECK(sc.tile_loads + sc.tile_stores > rc.tile_loads + rc.tile_stores);
    CHECK(sc.mma_count == rc.mma_count);
}

TEST_CASE("tiled matmul of padded matrices")
{
    std::mt19937 rng(5);
    Engine eng;
    const Md a = random_ints(37, 21, -4, 4, rng);
    const Md b = random_ints(21, 19, -4, 4, rng);
    const DenseMatrix<Half> ha = a.unaryExpr([](double x) { return from_f64(x); });
    const DenseMatrix<Half> hb = b.unaryExpr([](double x) { return from_f64(x); });
    for (auto shape : {kTile16x16x16, kTile32x8x16, kTile8x32x16}) {
        const auto c = naive_tiled_matmul<float>(eng, ha, hb, shape);
        REQUIRE(c.rows() == 37);
        REQUIRE(c.cols() == 19);
        CHECK(c.cast<double>() == a * b);
    }
}

#include "support/data.hpp"
#include "tcu/error.hpp"
#include "tcu/scan.hpp"

#include <doctest.h>

using namespace tcu;

namespace {

std::vector<double> prefix_of(const std::vector<Half>& v, std::size_t seg)
{
    std::vector<double> out(v.size());
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i % seg == 0)
            s = 0;
        s += to_f64(v[i]);
        out[i] = s;
    }
    return out;
}

double wide(Half h) { return to_f64(h); }
double wide(float f) { return f; }

template <typename Acc>
void require_equal(const std::vector<Acc>& got, const std::vector<double>& expect)
{
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        CAPTURE(i);
        REQUIRE(wide(got[i]) == expect[i]);
    }
}

} // namespace

TEST_CASE("scan_16 and scan_256")
{
    Engine eng;
    std::vector<Half> ones(256, kHalfOne);
    const auto r16 = scan_16(ones, eng);
    for (std::size_t i = 0; i < 256; ++i)
        CHECK(to_f64(r16[i]) == static_cast<double>(i % 16 + 1));
    CHECK(eng.counters().mma_count == 1);

    eng.reset_counters();
    const auto r256 = scan_256<float>(ones, eng);
    for (std::size_t i = 0; i < 256; ++i)
        CHECK(r256[i] == static_cast<float>(i + 1));
    CHECK(eng.counters().mma_count == 3);

    std::vector<Half> small(256, kHalfZero);
    small[0] = from_f64(1);
    small[1] = from_f64(2);
    small[2] = from_f64(3);
    small[3] = from_f64(4);
    const auto r = scan_256(small, eng);
    CHECK(to_f64(r[0]) == 1);
    CHECK(to_f64(r[1]) == 3);
    CHECK(to_f64(r[2]) == 6);
    CHECK(to_f64(r[3]) == 10);
    CHECK(to_f64(r[255]) == 10);
}

TEST_CASE("scan_256n costs 3N")
{
    for (std::size_t n : {1, 2, 4, 16}) {
        const auto v = testdata::sparse_integers(256 * n, 256 * n, static_cast<std::uint32_t>(n));
        Engine eng;
        require_equal(scan_256n(v, n, eng), prefix_of(v, v.size()));
        CHECK(eng.counters().mma_count == 3 * n);
    }
}

TEST_CASE("scan_16n carries per-row totals")
{
    for (std::size_t seg : {16, 32, 80, 272, 4096}) {
        const auto v = testdata::sparse_integers(16 * seg, seg, static_cast<std::uint32_t>(seg) + 1);
        const auto expect = prefix_of(v, seg);
        Engine eng;
        std::size_t calls = 0;
        const auto out = scan_16n<Half>(v, seg, eng, [&](std::size_t it, std::span<const Half> carry) {
            REQUIRE(carry.size() == 16);
            for (std::size_t r = 0; r < 16; ++r)
                REQUIRE(to_f64(carry[r]) == expect[r * seg + 16 * it + 15]);
            ++calls;
        });
        require_equal(out, expect);
        CHECK(calls == seg / 16);
        CHECK(eng.counters().mma_count == seg / 16);
    }
}

TEST_CASE("last column scan")
{
    Engine eng;
    std::vector<float> tile(256, 0.0f);
    for (int r = 0; r < 16; ++r)
        tile[static_cast<std::size_t>(16 * r + 15)] = static_cast<float>(r + 1);
    const auto e = eng.load_tile<float>(tile, 0, Layout::RowMajor, 16, FragmentKind::Accumulator);
    const auto before = eng.counters().mma_count;
    const auto p = last_column_scan_16<float>(e, eng, 100.0f);
    CHECK(eng.counters().mma_count - before == 1);
    float expect = 100.0f;
    for (int j = 0; j < 16; ++j) {
        CHECK(p[static_cast<std::size_t>(j)] == expect);
        expect += static_cast<float>(j + 1);
    }
}

TEST_CASE("block scan")
{
    SUBCASE("ones")
    {
        const std::vector<Half> ones(4096, kHalfOne);
        Launcher launcher;
        std::vector<float> partials;
        const auto out = block_scan_256n<float>(ones, 4096, BlockConfig{4, 1}, launcher, &partials);
        for (std::size_t i = 0; i < out.size(); ++i)
            REQUIRE(out[i] == static_cast<float>(i + 1));
        CHECK(partials == std::vector<float>{0, 256, 512, 768});
        CHECK(launcher.passes() == 1);

        Launcher lh;
        const auto half_out = block_scan_256n<Half>(ones, 4096, BlockConfig{4, 1}, lh);
        // binary16 prefixes are exact up to 2048
        for (std::size_t i = 0; i < 2048; ++i)
            REQUIRE(to_f64(half_out[i]) == static_cast<double>(i + 1));
    }
    SUBCASE("sparse integers, several warp counts")
    {
        const std::size_t seg = 1 << 14;
        const auto v = testdata::sparse_integers(3 * seg, seg, 17);
        const auto expect = prefix_of(v, seg);
        for (int wpb : {1, 2, 4, 8, 16}) {
            Launcher launcher({4});
            require_equal(block_scan_256n<Half>(v, seg, BlockConfig{wpb, 1}, launcher), expect);
        }
    }
    Launcher launcher;
    CHECK_THROWS_AS(block_scan_256n<Half>(std::vector<Half>(768), 768, BlockConfig{2, 1}, launcher), Error);
}

TEST_CASE("grid scan takes three passes")
{
    const auto v = testdata::sparse_integers(1 << 16, 1 << 16, 23);
    Launcher launcher({2});
    require_equal(grid_scan<float>(v, v.size(), launcher, {1024}), prefix_of(v, v.size()));
    CHECK(launcher.passes() == 3);

    const auto seg = testdata::sparse_integers(4 * 2048, 2048, 29);
    Launcher l2;
    require_equal(grid_scan<Half>(seg, 2048, l2, {512}), prefix_of(seg, 2048));
}

TEST_CASE("segmented dispatcher pads ragged input")
{
    const std::vector<ScanVariant> all = {ScanVariant::Warp16,   ScanVariant::Warp256,
                                          ScanVariant::Strided16N, ScanVariant::Warp256N,
                                          ScanVariant::Block256N, ScanVariant::GridThreePass};
    for (std::size_t seg : {1, 7, 16, 40, 256, 300, 1100}) {
        std::vector<Half> v(seg * 5 + seg / 3 + 1);
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = from_f64(static_cast<double>(i % 3));
        const auto expect = prefix_of(v, seg);
        for (auto variant : all) {
            if ((variant == ScanVariant::Warp16 && seg > 16) || (variant == ScanVariant::Warp256 && seg > 256))
                continue;
            CAPTURE(seg);
            CAPTURE(to_string(variant));
            Launcher launcher({2});
            const auto r = segmented_scan<float>(v, seg, variant, BlockConfig{2, 2}, launcher);
            require_equal(r.values, expect);
        }
    }
}

TEST_CASE("exclusive from inclusive")
{
    const std::vector<int> inc = {1, 3, 6, 10, 5, 11};
    CHECK(exclusive_from_inclusive<int>(inc, 4) == std::vector<int>{0, 1, 3, 6, 0, 5});
}

TEST_CASE("variant names round-trip")
{
    for (auto v : {ScanVariant::Warp16, ScanVariant::Warp256, ScanVariant::Strided16N,
                   ScanVariant::Warp256N, ScanVariant::Block256N, ScanVariant::GridThreePass}) {
        ScanVariant back{};
        CHECK(parse_scan_variant(to_string(v), back));
        CHECK(back == v);
    }
}

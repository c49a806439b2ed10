#include "support/data.hpp"
#include "tcu/error.hpp"
#include "tcu/reduce.hpp"

#include <doctest.h>

#include <numeric>

using namespace tcu;

namespace {

std::vector<double> sums_of(const std::vector<Half>& v, std::size_t seg)
{
    std::vector<double> out;
    for (std::size_t b = 0; b < v.size(); b += seg) {
        double s = 0;
        for (std::size_t i = b; i < std::min(v.size(), b + seg); ++i)
            s += to_f64(v[i]);
        out.push_back(s);
    }
    return out;
}

template <typename Acc>
double wide(Acc a)
{
    if constexpr (std::is_same_v<Acc, Half>)
        return to_f64(a);
    else
        return a;
}

std::vector<Half> iota_half(std::size_t n, int mod)
{
    std::vector<Half> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = from_f64(static_cast<double>(i % static_cast<std::size_t>(mod)));
    return v;
}

} // namespace

TEST_CASE("warp primitives")
{
    Engine eng;
    std::vector<Half> ones(256, kHalfOne);
    const auto r16 = reduce_16(ones, eng);
    for (auto s : r16)
        CHECK(to_f64(s) == 16);
    CHECK(eng.counters().mma_count == 1);

    eng.reset_counters();
    CHECK(to_f64(reduce_256(ones, eng)) == 256);
    CHECK(eng.counters().mma_count == 2);
    CHECK(eng.counters().cycle_estimate() == 64);

    // [1..16] per segment
    std::vector<Half> ramp(256);
    for (std::size_t i = 0; i < 256; ++i)
        ramp[i] = from_f64(static_cast<double>(i % 16 + 1));
    for (auto s : reduce_16<float>(ramp, eng))
        CHECK(s == 136.0f);
}

TEST_CASE("256N closed forms")
{
    for (std::size_t n : {1, 4, 16}) {
        const auto v = iota_half(256 * n, 2); // totals stay <= 2048
        const double expect = sums_of(v, v.size())[0];
        Engine e1, e2;
        CHECK(to_f64(reduce_256n_efficient(v, n, e1)) == expect);
        CHECK(to_f64(reduce_256n_inefficient(v, n, e2)) == expect);
        CHECK(e1.counters().mma_count == n + 1);
        CHECK(e2.counters().mma_count == 2 * n);
    }
}

TEST_CASE("16N strided and coalesced")
{
    for (std::size_t seg : {16, 32, 48, 256, 272, 4096}) {
        const auto v = testdata::sparse_integers(16 * seg, seg, static_cast<std::uint32_t>(seg));
        const auto expect = sums_of(v, seg);
        Engine es, ec;
        const auto s = reduce_16n_strided<Half>(v, seg, es);
        const auto c = reduce_16n_coalesced<float>(v, seg, ec);
        const std::size_t n = seg / 16;
        CHECK(es.counters().mma_count == n);
        CHECK(ec.counters().mma_count == 16 * (n / 16) + n % 16 + 1 - (n < 16 ? 1 : 0));
        for (std::size_t i = 0; i < 16; ++i) {
            CHECK(to_f64(s[i]) == expect[i]);
            CHECK(c[i] == expect[i]);
        }
    }
}

TEST_CASE("block and grid")
{
    const std::size_t seg = 4096;
    const auto v = testdata::sparse_integers(8 * seg, seg, 9);
    const auto expect = sums_of(v, seg);
    for (int wpb : {1, 2, 4, 16}) {
        Launcher launcher;
        std::vector<Half> partials;
        const auto r = block_reduce_256n<Half>(v, seg, BlockConfig{wpb, 1}, launcher, &partials);
        REQUIRE(r.size() == 8);
        CHECK(partials.size() == 8 * static_cast<std::size_t>(wpb));
        for (std::size_t s = 0; s < 8; ++s)
            CHECK(to_f64(r[s]) == expect[s]);
        CHECK(launcher.passes() == 1);
    }
    Launcher launcher;
    const auto g = grid_reduce_segmented<float>(v, seg, launcher);
    for (std::size_t s = 0; s < 8; ++s)
        CHECK(g[s] == expect[s]);
    CHECK(launcher.passes() == 2);

    Launcher single;
    const auto all = testdata::sparse_integers(1 << 16, 1 << 16, 4);
    CHECK(to_f64(grid_reduce<Half>(all, single)) == sums_of(all, all.size())[0]);
    CHECK(single.passes() == 2);
    CHECK_THROWS_AS(block_reduce_256n<Half>(v, seg, BlockConfig{17, 1}, launcher), Error);
    CHECK_THROWS_AS(block_reduce_256n<Half>(v, seg, BlockConfig{3, 1}, launcher), Error);
}

TEST_CASE("segmented dispatcher pads ragged input")
{
    const std::vector<ReduceVariant> all = {
        ReduceVariant::Warp16,          ReduceVariant::Warp256,
        ReduceVariant::Strided16N,      ReduceVariant::Coalesced16N,
        ReduceVariant::WorkEfficient256N, ReduceVariant::WorkInefficient256N,
        ReduceVariant::Block256N,       ReduceVariant::GridTwoPass};
    for (std::size_t seg : {1, 5, 16, 17, 100, 256, 300, 1000}) {
        const auto v = iota_half(seg * 11 + seg / 2 + 1, 5);
        const auto expect = sums_of(v, seg);
        for (auto variant : all) {
            if ((variant == ReduceVariant::Warp16 && seg > 16) || (variant == ReduceVariant::Warp256 && seg > 256))
                continue;
            CAPTURE(seg);
            CAPTURE(to_string(variant));
            Launcher launcher({3});
            const auto r = segmented_reduce<float>(v, seg, variant, BlockConfig{2, 3}, launcher);
            REQUIRE(r.sums.size() == expect.size());
            for (std::size_t s = 0; s < expect.size(); ++s)
                CHECK(r.sums[s] == expect[s]);
            CHECK(r.padded_seg_size >= seg);
        }
    }
}

TEST_CASE("variant names round-trip")
{
    for (auto v : {ReduceVariant::Warp16, ReduceVariant::Warp256, ReduceVariant::Strided16N,
                   ReduceVariant::Coalesced16N, ReduceVariant::WorkEfficient256N,
                   ReduceVariant::WorkInefficient256N, ReduceVariant::Block256N, ReduceVariant::GridTwoPass}) {
        ReduceVariant back{};
        CHECK(parse_reduce_variant(to_string(v), back));
        CHECK(back == v);
    }
    ReduceVariant x{};
    CHECK_FALSE(parse_reduce_variant("nope", x));
}

TEST_CASE("length errors")
{
    Engine eng;
    std::vector<Half> v(100);
    try {
        reduce_256(v, eng);
        FAIL("expected BadLength");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BadLength);
    }
    CHECK_THROWS_AS(reduce_16n_strided<Half>(std::vector<Half>(16 * 20), 20, eng), Error);
}

#include "tcu/reduce.hpp"

#include "warp_ops.hpp"

#include <algorithm>

namespace tcu {

using detail::kTileDim;
using detail::kTileElems;

namespace {

constexpr std::size_t kSegmentsPerGroup = 16;

std::size_t round_up(std::size_t v, std::size_t unit) { return (v + unit - 1) / unit * unit; }

// 16 segments of 16N accumulated into row 0 of v, columns = segments.
// Tile i holds elements [16i, 16i + 16) of every segment.
template <typename Acc>
void strided_accumulate(std::span<const Half> group, std::size_t seg_size, std::size_t first_chunk,
                        std::size_t chunks, const HalfFragment& p, Fragment<Acc>& v, Engine& engine)
{
    for (std::size_t i = first_chunk; i < first_chunk + chunks; ++i) {
        const auto a = engine.load_tile<Half>(group, kTileDim * i, Layout::ColMajor, seg_size,
                                              FragmentKind::MatrixB);
        v = engine.mma(p, a, v);
    }
}

template <typename Acc>
void write_row0(const Fragment<Acc>& v, std::span<Acc> out, Engine& engine)
{
    const auto row = engine.extract_row(v, 0);
    std::copy_n(row.begin(), out.size(), out.begin());
    engine.record_element_stores(out.size());
}

// Reduction of a tile of up to 16 accumulator-typed partials (the block
// reduce's second phase), laid out contiguously and zero padded to 256.
template <typename Acc>
Acc reduce_partials_tile(std::span<const Acc> tile, Engine& engine)
{
    return detail::reduce_tiles<Acc, Acc>(tile, 1, engine);
}

} // namespace

std::string_view to_string(ReduceVariant v) noexcept
{
    switch (v) {
    case ReduceVariant::Warp16: return "warp16";
    case ReduceVariant::Warp256: return "warp256";
    case ReduceVariant::Strided16N: return "strided16n";
    case ReduceVariant::Coalesced16N: return "coalesced16n";
    case ReduceVariant::WorkEfficient256N: return "efficient256n";
    case ReduceVariant::WorkInefficient256N: return "inefficient256n";
    case ReduceVariant::Block256N: return "block256n";
    case ReduceVariant::GridTwoPass: return "grid";
    }
    return "?";
}

bool parse_reduce_variant(std::string_view name, ReduceVariant& out) noexcept
{
    for (auto v : {ReduceVariant::Warp16, ReduceVariant::Warp256, ReduceVariant::Strided16N,
                   ReduceVariant::Coalesced16N, ReduceVariant::WorkEfficient256N,
                   ReduceVariant::WorkInefficient256N, ReduceVariant::Block256N,
                   ReduceVariant::GridTwoPass}) {
        if (to_string(v) == name) {
            out = v;
            return true;
        }
    }
    return false;
}

void validate(const BlockConfig& cfg)
{
    if (cfg.warps_per_block < 1 || cfg.warps_per_block > 16)
        throw Error(Errc::BadConfig, "warps per block must be in [1, 16]");
    if (cfg.coarsening < 1)
        throw Error(Errc::BadConfig, "coarsening must be positive");
}

template <typename Acc>
std::array<Acc, 16> reduce_16(std::span<const Half> input, Engine& engine)
{
    detail::require_length(input.size(), kTileElems, "reduce_16");
    const auto p = engine.make_P();
    const auto a = engine.load_tile<Half>(input, 0, Layout::ColMajor, kTileDim, FragmentKind::MatrixB);
    const auto v = engine.mma(p, a, detail::zero_accumulator<Acc>(engine));
    std::array<Acc, 16> out{};
    write_row0<Acc>(v, out, engine);
    return out;
}

template <typename Acc>
Acc reduce_256(std::span<const Half> input, Engine& engine)
{
    detail::require_length(input.size(), kTileElems, "reduce_256");
    return detail::reduce_tiles<Acc, Half>(input, 1, engine);
}

template <typename Acc>
Acc reduce_256n_efficient(std::span<const Half> input, std::size_t n, Engine& engine)
{
    return detail::reduce_tiles<Acc, Half>(input, n, engine);
}

template <typename Acc>
Acc reduce_256n_inefficient(std::span<const Half> input, std::size_t n, Engine& engine)
{
    detail::require_length(input.size(), kTileElems * n, "reduce_256n_inefficient");
    if (n == 0)
        throw Error(Errc::BadLength, "reduce_256n_inefficient: need at least one tile");

    const auto p = engine.make_P();
    const auto pt = engine.make_PT();
    const auto zero = detail::zero_accumulator<Acc>(engine);
    // R = V.P^T + Q only has R(0,0) set, so R can serve directly as the next Q.
    auto q = zero;
    for (std::size_t i = 0; i < n; ++i) {
        const auto a = engine.load_tile<Half>(input, kTileElems * i, Layout::ColMajor, kTileDim,
                                              FragmentKind::MatrixB);
        const auto v = engine.mma(p, a, zero);
        const auto va = engine.cast_kind<Half>(v, FragmentKind::MatrixA);
        q = engine.mma(va, pt, q);
    }
    const Acc total = engine.extract(q, 0, 0);
    engine.record_element_stores(1);
    return total;
}

template <typename Acc>
std::vector<Acc> reduce_16n_strided(std::span<const Half> input, std::size_t seg_size,
                                    Engine& engine)
{
    detail::require_multiple(seg_size, kTileDim, "reduce_16n_strided segment");
    const std::size_t chunks = seg_size / kTileDim;
    const std::size_t group = kSegmentsPerGroup * seg_size;
    detail::require_multiple(input.size(), group, "reduce_16n_strided");

    const auto p = engine.make_P();
    std::vector<Acc> out(input.size() / seg_size);
    for (std::size_t g = 0; g * group < input.size(); ++g) {
        auto v = detail::zero_accumulator<Acc>(engine);
        strided_accumulate<Acc>(input.subspan(g * group, group), seg_size, 0, chunks, p, v, engine);
        write_row0<Acc>(v, std::span<Acc>(out).subspan(g * kSegmentsPerGroup, kSegmentsPerGroup), engine);
    }
    return out;
}

template <typename Acc>
std::vector<Acc> reduce_16n_coalesced(std::span<const Half> input, std::size_t seg_size,
                                      Engine& engine)
{
    detail::require_multiple(seg_size, kTileDim, "reduce_16n_coalesced segment");
    const std::size_t chunks = seg_size / kTileDim;
    const std::size_t full_tiles = seg_size / kTileElems;
    const std::size_t leftover_chunks = chunks % kTileDim;
    const std::size_t group = kSegmentsPerGroup * seg_size;
    detail::require_multiple(input.size(), group, "reduce_16n_coalesced");

    const auto p = engine.make_P();
    std::vector<Acc> out(input.size() / seg_size);
    // per-segment column partials, one 256 block per segment
    std::vector<Acc> partials(kSegmentsPerGroup * kTileElems);

    for (std::size_t g = 0; g * group < input.size(); ++g) {
        const auto grp = input.subspan(g * group, group);

        // leftover 16*(N%16) elements of each segment, strided across the group
        auto v = detail::zero_accumulator<Acc>(engine);
        strided_accumulate<Acc>(grp, seg_size, full_tiles * kTileDim, leftover_chunks, p, v, engine);

        if (full_tiles > 0) {
            // contiguous 256-element tiles of one segment at a time
            for (std::size_t s = 0; s < kSegmentsPerGroup; ++s) {
                auto vs = detail::zero_accumulator<Acc>(engine);
                for (std::size_t i = 0; i < full_tiles; ++i) {
                    const auto a = engine.load_tile<Half>(grp, s * seg_size + kTileElems * i,
                                                          Layout::ColMajor, kTileDim,
                                                          FragmentKind::MatrixB);
                    vs = engine.mma(p, a, vs);
                }
                engine.store_tile<Acc>(vs, partials, s * kTileElems, Layout::RowMajor, kTileDim);
            }
            // column s of w = row 0 of segment s's partials
            const auto w = detail::load_operand<Acc>(engine, partials, 0, Layout::ColMajor,
                                                     kTileElems, FragmentKind::MatrixB);
            v = engine.mma(p, w, v);
        }
        write_row0<Acc>(v, std::span<Acc>(out).subspan(g * kSegmentsPerGroup, kSegmentsPerGroup), engine);
    }
    return out;
}

template <typename Acc>
std::vector<Acc> block_reduce_256n(std::span<const Half> input, std::size_t seg_size,
                                   const BlockConfig& cfg, Launcher& launcher,
                                   std::vector<Acc>* warp_partials)
{
    validate(cfg);
    const auto wpb = static_cast<std::size_t>(cfg.warps_per_block);
    if (seg_size == 0 || seg_size % (kTileElems * wpb) != 0)
        throw Error(Errc::BadConfig, "segment of " + std::to_string(seg_size) +
                                         " does not split into 256N slices across " +
                                         std::to_string(wpb) + " warps");
    detail::require_multiple(input.size(), seg_size, "block_reduce_256n");

    const std::size_t blocks = input.size() / seg_size;
    const std::size_t slice = seg_size / wpb;
    // shared memory: a zero-padded tile of partials per block
    std::vector<Acc> shared(blocks * kTileElems, Acc{});
    std::vector<Acc> out(blocks);

    launcher.begin_pass();
    launcher.parallel_for(blocks * wpb, [&](std::size_t i, Engine& engine) {
        const std::size_t b = i / wpb;
        const std::size_t w = i % wpb;
        const auto mine = input.subspan(b * seg_size + w * slice, slice);
        shared[b * kTileElems + w] = reduce_256n_efficient<Acc>(mine, slice / kTileElems, engine);
    });
    // sync threads
    if (warp_partials) {
        warp_partials->clear();
        for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t w = 0; w < wpb; ++w)
                warp_partials->push_back(shared[b * kTileElems + w]);
    }
    launcher.parallel_for(blocks, [&](std::size_t b, Engine& engine) {
        out[b] = reduce_partials_tile<Acc>(std::span<const Acc>(shared).subspan(b * kTileElems, kTileElems),
                                           engine);
    });
    return out;
}

template <typename Acc>
std::vector<Acc> grid_reduce_segmented(std::span<const Half> input, std::size_t seg_size,
                                       Launcher& launcher, const GridConfig& cfg)
{
    detail::require_multiple(seg_size, kTileElems, "grid_reduce segment");
    detail::require_multiple(input.size(), seg_size, "grid_reduce");
    if (cfg.chunk_tiles == 0)
        throw Error(Errc::BadConfig, "grid chunk must hold at least one tile");

    const std::size_t segments = input.size() / seg_size;
    const std::size_t chunk = cfg.chunk_tiles * kTileElems;
    const std::size_t chunks_per_seg = (seg_size + chunk - 1) / chunk;

    // pass 1: one partial per chunk
    std::vector<Acc> partials(segments * chunks_per_seg);
    launcher.begin_pass();
    launcher.parallel_for(partials.size(), [&](std::size_t i, Engine& engine) {
        const std::size_t s = i / chunks_per_seg;
        const std::size_t c = i % chunks_per_seg;
        const std::size_t begin = c * chunk;
        const std::size_t len = std::min(chunk, seg_size - begin);
        partials[i] = reduce_256n_efficient<Acc>(input.subspan(s * seg_size + begin, len),
                                                 len / kTileElems, engine);
    });

    // pass 2: reduce each segment's partials
    const std::size_t padded = round_up(chunks_per_seg, kTileElems);
    std::vector<Acc> staged(segments * padded, Acc{});
    for (std::size_t s = 0; s < segments; ++s)
        std::copy_n(partials.begin() + static_cast<std::ptrdiff_t>(s * chunks_per_seg),
                    chunks_per_seg, staged.begin() + static_cast<std::ptrdiff_t>(s * padded));

    std::vector<Acc> out(segments);
    launcher.begin_pass();
    launcher.parallel_for(segments, [&](std::size_t s, Engine& engine) {
        out[s] = detail::reduce_tiles<Acc, Acc>(std::span<const Acc>(staged).subspan(s * padded, padded),
                                                padded / kTileElems, engine);
    });
    return out;
}

template <typename Acc>
Acc grid_reduce(std::span<const Half> input, Launcher& launcher, const GridConfig& cfg)
{
    const std::size_t padded = std::max(round_up(input.size(), kTileElems), kTileElems);
    std::vector<Half> buf(padded, kHalfZero);
    std::copy(input.begin(), input.end(), buf.begin());
    return grid_reduce_segmented<Acc>(buf, padded, launcher, cfg).front();
}

std::size_t padded_segment_size(ReduceVariant v, std::size_t seg_size, const BlockConfig& cfg)
{
    if (seg_size == 0)
        throw Error(Errc::BadConfig, "segment size must be positive");
    switch (v) {
    case ReduceVariant::Warp16:
        if (seg_size > kTileDim)
            throw Error(Errc::BadConfig, "warp16 handles segments of at most 16");
        return kTileDim;
    case ReduceVariant::Warp256:
        if (seg_size > kTileElems)
            throw Error(Errc::BadConfig, "warp256 handles segments of at most 256");
        return kTileElems;
    case ReduceVariant::Strided16N:
    case ReduceVariant::Coalesced16N:
        return round_up(seg_size, kTileDim);
    case ReduceVariant::WorkEfficient256N:
    case ReduceVariant::WorkInefficient256N:
    case ReduceVariant::GridTwoPass:
        return round_up(seg_size, kTileElems);
    case ReduceVariant::Block256N:
        validate(cfg);
        return round_up(seg_size, kTileElems * static_cast<std::size_t>(cfg.warps_per_block));
    }
    return seg_size;
}

template <typename Acc>
ReduceResult<Acc> segmented_reduce(std::span<const Half> input, std::size_t seg_size,
                                   ReduceVariant variant, const BlockConfig& cfg,
                                   Launcher& launcher)
{
    validate(cfg);
    const std::size_t padded_seg = padded_segment_size(variant, seg_size, cfg);
    const std::size_t segments = std::max<std::size_t>(1, (input.size() + seg_size - 1) / seg_size);

    const bool grouped = variant == ReduceVariant::Warp16 || variant == ReduceVariant::Strided16N ||
                         variant == ReduceVariant::Coalesced16N;
    const std::size_t padded_segments = grouped ? round_up(segments, kSegmentsPerGroup) : segments;

    std::vector<Half> buf(padded_segments * padded_seg, kHalfZero);
    for (std::size_t s = 0; s < segments; ++s) {
        const std::size_t begin = s * seg_size;
        const std::size_t len = std::min(seg_size, input.size() - std::min(begin, input.size()));
        std::copy_n(input.begin() + static_cast<std::ptrdiff_t>(begin), len,
                    buf.begin() + static_cast<std::ptrdiff_t>(s * padded_seg));
    }
    const std::span<const Half> data(buf);

    ReduceResult<Acc> result;
    result.padded_seg_size = padded_seg;
    result.padded_elements = buf.size();
    std::vector<Acc> sums(padded_segments);

    // warp-level variants: one task per `coarsening` units of work
    const auto coarsen = static_cast<std::size_t>(cfg.coarsening);
    auto run_units = [&](std::size_t units, auto&& unit_body) {
        launcher.begin_pass();
        launcher.parallel_for((units + coarsen - 1) / coarsen, [&](std::size_t t, Engine& engine) {
            for (std::size_t u = t * coarsen; u < std::min(units, (t + 1) * coarsen); ++u)
                unit_body(u, engine);
        });
    };

    const std::size_t group = kSegmentsPerGroup * padded_seg;
    switch (variant) {
    case ReduceVariant::Warp16:
        run_units(padded_segments / kSegmentsPerGroup, [&](std::size_t g, Engine& engine) {
            const auto r = reduce_16<Acc>(data.subspan(g * kTileElems, kTileElems), engine);
            std::copy(r.begin(), r.end(), sums.begin() + static_cast<std::ptrdiff_t>(g * kSegmentsPerGroup));
        });
        break;
    case ReduceVariant::Strided16N:
    case ReduceVariant::Coalesced16N:
        run_units(padded_segments / kSegmentsPerGroup, [&](std::size_t g, Engine& engine) {
            const auto grp = data.subspan(g * group, group);
            const auto r = variant == ReduceVariant::Strided16N
                               ? reduce_16n_strided<Acc>(grp, padded_seg, engine)
                               : reduce_16n_coalesced<Acc>(grp, padded_seg, engine);
            std::copy(r.begin(), r.end(), sums.begin() + static_cast<std::ptrdiff_t>(g * kSegmentsPerGroup));
        });
        break;
    case ReduceVariant::Warp256:
        run_units(padded_segments, [&](std::size_t s, Engine& engine) {
            sums[s] = reduce_256<Acc>(data.subspan(s * padded_seg, padded_seg), engine);
        });
        break;
    case ReduceVariant::WorkEfficient256N:
        run_units(padded_segments, [&](std::size_t s, Engine& engine) {
            sums[s] = reduce_256n_efficient<Acc>(data.subspan(s * padded_seg, padded_seg),
                                                 padded_seg / kTileElems, engine);
        });
        break;
    case ReduceVariant::WorkInefficient256N:
        run_units(padded_segments, [&](std::size_t s, Engine& engine) {
            sums[s] = reduce_256n_inefficient<Acc>(data.subspan(s * padded_seg, padded_seg),
                                                   padded_seg / kTileElems, engine);
        });
        break;
    case ReduceVariant::Block256N:
        sums = block_reduce_256n<Acc>(data, padded_seg, cfg, launcher);
        break;
    case ReduceVariant::GridTwoPass:
        sums = grid_reduce_segmented<Acc>(data, padded_seg, launcher);
        break;
    }

    sums.resize(segments);
    result.sums = std::move(sums);
    return result;
}

#define TCU_INSTANTIATE_REDUCE(Acc)                                                               \
    template std::array<Acc, 16> reduce_16<Acc>(std::span<const Half>, Engine&);                 \
    template Acc reduce_256<Acc>(std::span<const Half>, Engine&);                                \
    template Acc reduce_256n_efficient<Acc>(std::span<const Half>, std::size_t, Engine&);        \
    template Acc reduce_256n_inefficient<Acc>(std::span<const Half>, std::size_t, Engine&);      \
    template std::vector<Acc> reduce_16n_strided<Acc>(std::span<const Half>, std::size_t,        \
                                                      Engine&);                                  \
    template std::vector<Acc> reduce_16n_coalesced<Acc>(std::span<const Half>, std::size_t,      \
                                                        Engine&);                                \
    template std::vector<Acc> block_reduce_256n<Acc>(std::span<const Half>, std::size_t,         \
                                                     const BlockConfig&, Launcher&,              \
                                                     std::vector<Acc>*);                         \
    template std::vector<Acc> grid_reduce_segmented<Acc>(std::span<const Half>, std::size_t,     \
                                                         Launcher&, const GridConfig&);          \
    template Acc grid_reduce<Acc>(std::span<const Half>, Launcher&, const GridConfig&);          \
    template ReduceResult<Acc> segmented_reduce<Acc>(std::span<const Half>, std::size_t,         \
                                                     ReduceVariant, const BlockConfig&,          \
                                                     Launcher&);

TCU_INSTANTIATE_REDUCE(Half)
TCU_INSTANTIATE_REDUCE(float)

#undef TCU_INSTANTIATE_REDUCE

} // namespace tcu

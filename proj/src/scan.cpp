#include "tcu/scan.hpp"

#include "warp_ops.hpp"

#include <algorithm>

namespace tcu {

using detail::kTileDim;
using detail::kTileElems;

namespace {

constexpr std::size_t kSegmentsPerGroup = 16;

std::size_t round_up(std::size_t v, std::size_t unit) { return (v + unit - 1) / unit * unit; }

template <typename Acc>
Acc scalar_add(Acc a, Acc b)
{
    if constexpr (std::is_same_v<Acc, Half>)
        return add(a, b);
    else
        return a + b;
}

} // namespace

std::string_view to_string(ScanVariant v) noexcept
{
    switch (v) {
    case ScanVariant::Warp16: return "warp16";
    case ScanVariant::Warp256: return "warp256";
    case ScanVariant::Strided16N: return "strided16n";
    case ScanVariant::Warp256N: return "warp256n";
    case ScanVariant::Block256N: return "block256n";
    case ScanVariant::GridThreePass: return "grid";
    }
    return "?";
}

bool parse_scan_variant(std::string_view name, ScanVariant& out) noexcept
{
    for (auto v : {ScanVariant::Warp16, ScanVariant::Warp256, ScanVariant::Strided16N,
                   ScanVariant::Warp256N, ScanVariant::Block256N, ScanVariant::GridThreePass}) {
        if (to_string(v) == name) {
            out = v;
            return true;
        }
    }
    return false;
}

template <typename Acc>
std::vector<Acc> scan_16(std::span<const Half> input, Engine& engine)
{
    detail::require_length(input.size(), kTileElems, "scan_16");
    const auto u = engine.make_U();
    const auto a = engine.load_tile<Half>(input, 0, Layout::RowMajor, kTileDim, FragmentKind::MatrixA);
    const auto r = engine.mma(a, u, detail::zero_accumulator<Acc>(engine));
    std::vector<Acc> out(kTileElems);
    engine.store_tile<Acc>(r, out, 0, Layout::RowMajor, kTileDim);
    return out;
}

template <typename Acc>
std::vector<Acc> scan_256(std::span<const Half> input, Engine& engine)
{
    detail::require_length(input.size(), kTileElems, "scan_256");
    return scan_256n<Acc>(input, 1, engine);
}

template <typename Acc>
std::vector<Acc> scan_256n(std::span<const Half> input, std::size_t n, Engine& engine)
{
    if (n == 0)
        throw Error(Errc::BadLength, "scan_256n: need at least one tile");
    std::vector<Acc> out(input.size());
    detail::scan_tiles<Acc, Half>(input, n, out, engine);
    return out;
}

template <typename Acc>
std::vector<Acc> scan_16n(std::span<const Half> input, std::size_t seg_size, Engine& engine,
                          const CarryObserver<Acc>& observer)
{
    detail::require_multiple(seg_size, kTileDim, "scan_16n segment");
    const std::size_t chunks = seg_size / kTileDim;
    const std::size_t group = kSegmentsPerGroup * seg_size;
    detail::require_multiple(input.size(), group, "scan_16n");

    const auto u = engine.make_U();
    std::vector<Acc> out(input.size());
    for (std::size_t base = 0; base < input.size(); base += group) {
        auto carry = detail::zero_accumulator<Acc>(engine);
        for (std::size_t i = 0; i < chunks; ++i) {
            // row r = elements [16i, 16i + 16) of segment r
            const std::size_t idx = base + kTileDim * i;
            const auto a = engine.load_tile<Half>(input, idx, Layout::RowMajor, seg_size,
                                                  FragmentKind::MatrixA);
            const auto r = engine.mma(a, u, carry);
            const auto last = engine.extract_column(r, 15);
            carry = engine.broadcast_rows<Acc>(last);
            engine.store_tile<Acc>(r, out, idx, Layout::RowMajor, seg_size);
            if (observer)
                observer(i, last);
        }
    }
    return out;
}

template <typename Acc>
std::array<Acc, 16> last_column_scan_16(const Fragment<Acc>& e, Engine& engine, Acc carry)
{
    // Move the last column into row 0: stored row-major, column 15 sits at
    // 15, 31, ..., 255, which is row 0 of a column-major tile at offset 15.
    // Rows 1..15 of that tile are don't-care, hence the zero-padded scratch.
    std::vector<Acc> scratch(2 * kTileElems, Acc{});
    engine.store_tile<Acc>(e, scratch, 0, Layout::RowMajor, kTileDim);
    const auto x = detail::load_operand<Acc>(engine, scratch, kTileDim - 1, Layout::ColMajor,
                                             kTileDim, FragmentKind::MatrixA);
    const auto strict_upper = engine.make_LT();
    const auto r = engine.mma(x, strict_upper, engine.broadcast<Acc>(carry));
    const auto row = engine.extract_row(r, 0);
    std::array<Acc, 16> out{};
    std::copy_n(row.begin(), out.size(), out.begin());
    engine.record_element_stores(out.size());
    return out;
}

template <typename Acc>
std::vector<Acc> block_scan_256n(std::span<const Half> input, std::size_t seg_size,
                                 const BlockConfig& cfg, Launcher& launcher,
                                 std::vector<Acc>* block_partials)
{
    validate(cfg);
    const auto wpb = static_cast<std::size_t>(cfg.warps_per_block);
    const std::size_t stride = kTileElems * wpb;
    if (seg_size == 0 || seg_size % stride != 0)
        throw Error(Errc::BadConfig, "segment of " + std::to_string(seg_size) +
                                         " is not a multiple of 256 x " + std::to_string(wpb) +
                                         " warps");
    detail::require_multiple(input.size(), seg_size, "block_scan_256n");

    const std::size_t blocks = input.size() / seg_size;
    const std::size_t iterations = seg_size / stride;
    constexpr std::size_t kSoutSize = kTileElems * 16;

    std::vector<Acc> out(input.size());
    std::vector<Acc> sout(blocks * kSoutSize, Acc{});
    std::vector<std::array<Acc, 16>> prtls(blocks);
    std::vector<Acc> carry(blocks, Acc{});
    if (block_partials)
        block_partials->clear();

    launcher.begin_pass();
    for (std::size_t it = 0; it < iterations; ++it) {
        // each warp scans one tile into shared memory
        launcher.parallel_for(blocks * wpb, [&](std::size_t i, Engine& engine) {
            const std::size_t b = i / wpb;
            const std::size_t w = i % wpb;
            const std::size_t idx = b * seg_size + kTileElems * (it * wpb + w);
            detail::scan_tiles<Acc, Half>(input.subspan(idx, kTileElems), 1,
                                          std::span<Acc>(sout).subspan(b * kSoutSize + kTileElems * w, kTileElems),
                                          engine);
        });
        // sync threads; warp 0 gathers the last row of every tile
        launcher.parallel_for(blocks, [&](std::size_t b, Engine& engine) {
            const std::span<const Acc> shared(sout.data() + b * kSoutSize, kSoutSize);
            const auto e = engine.load_tile<Acc>(shared, kTileElems - kTileDim, Layout::RowMajor,
                                                 kTileElems, FragmentKind::Accumulator);
            prtls[b] = last_column_scan_16<Acc>(e, engine, carry[b]);
        });
        if (block_partials && it == 0) {
            for (std::size_t b = 0; b < blocks; ++b)
                block_partials->insert(block_partials->end(), prtls[b].begin(), prtls[b].begin() + static_cast<std::ptrdiff_t>(wpb));
        }
        // sync threads; uniform add of the partials
        launcher.parallel_for(blocks * wpb, [&](std::size_t i, Engine& engine) {
            const std::size_t b = i / wpb;
            const std::size_t w = i % wpb;
            const std::size_t idx = b * seg_size + kTileElems * (it * wpb + w);
            const Acc offset = prtls[b][w];
            const Acc* src = sout.data() + b * kSoutSize + kTileElems * w;
            for (std::size_t j = 0; j < kTileElems; ++j)
                out[idx + j] = scalar_add(src[j], offset);
            engine.record_element_loads(kTileElems + 1);
            engine.record_element_stores(kTileElems);
            if (w + 1 == wpb)
                carry[b] = out[idx + kTileElems - 1];
        });
    }
    return out;
}

template <typename Acc>
std::vector<Acc> grid_scan(std::span<const Half> input, std::size_t seg_size, Launcher& launcher,
                           const GridScanConfig& cfg)
{
    const std::size_t capacity = cfg.block_capacity;
    if (capacity == 0 || capacity % kTileElems != 0)
        throw Error(Errc::BadConfig, "block capacity must be a positive multiple of 256");
    detail::require_multiple(seg_size, capacity, "grid_scan segment");
    detail::require_multiple(input.size(), seg_size, "grid_scan");

    const std::size_t segments = input.size() / seg_size;
    const std::size_t per_seg = seg_size / capacity;
    std::vector<Acc> out(input.size());
    std::vector<Acc> totals(segments * per_seg);

    // pass 1: scan every block, keep its total
    launcher.begin_pass();
    launcher.parallel_for(totals.size(), [&](std::size_t i, Engine& engine) {
        const std::size_t begin = i * capacity;
        detail::scan_tiles<Acc, Half>(input.subspan(begin, capacity), capacity / kTileElems,
                                      std::span<Acc>(out).subspan(begin, capacity), engine);
        totals[i] = out[begin + capacity - 1];
        engine.record_element_loads(1);
    });

    // pass 2: exclusive scan of the block totals of each segment
    const std::size_t padded = round_up(per_seg, kTileElems);
    std::vector<Acc> staged(segments * padded, Acc{});
    for (std::size_t s = 0; s < segments; ++s)
        std::copy_n(totals.begin() + static_cast<std::ptrdiff_t>(s * per_seg), per_seg,
                    staged.begin() + static_cast<std::ptrdiff_t>(s * padded));
    std::vector<Acc> scanned(staged.size());
    launcher.begin_pass();
    launcher.parallel_for(segments, [&](std::size_t s, Engine& engine) {
        detail::scan_tiles<Acc, Acc>(std::span<const Acc>(staged).subspan(s * padded, padded),
                                     padded / kTileElems,
                                     std::span<Acc>(scanned).subspan(s * padded, padded), engine);
    });
    const auto offsets = exclusive_from_inclusive<Acc>(scanned, padded);

    // pass 3: uniform add
    launcher.begin_pass();
    launcher.parallel_for(totals.size(), [&](std::size_t i, Engine& engine) {
        const std::size_t s = i / per_seg;
        const Acc offset = offsets[s * padded + i % per_seg];
        for (std::size_t j = i * capacity; j < (i + 1) * capacity; ++j)
            out[j] = scalar_add(out[j], offset);
        engine.record_element_loads(capacity + 1);
        engine.record_element_stores(capacity);
    });
    return out;
}

std::size_t padded_segment_size(ScanVariant v, std::size_t seg_size, const BlockConfig& cfg)
{
    if (seg_size == 0)
        throw Error(Errc::BadConfig, "segment size must be positive");
    switch (v) {
    case ScanVariant::Warp16:
        if (seg_size > kTileDim)
            throw Error(Errc::BadConfig, "warp16 handles segments of at most 16");
        return kTileDim;
    case ScanVariant::Warp256:
        if (seg_size > kTileElems)
            throw Error(Errc::BadConfig, "warp256 handles segments of at most 256");
        return kTileElems;
    case ScanVariant::Strided16N:
        return round_up(seg_size, kTileDim);
    case ScanVariant::Warp256N:
        return round_up(seg_size, kTileElems);
    case ScanVariant::Block256N:
    case ScanVariant::GridThreePass:
        validate(cfg);
        return round_up(seg_size, kTileElems * static_cast<std::size_t>(cfg.warps_per_block));
    }
    return seg_size;
}

template <typename Acc>
ScanResult<Acc> segmented_scan(std::span<const Half> input, std::size_t seg_size,
                               ScanVariant variant, const BlockConfig& cfg, Launcher& launcher)
{
    validate(cfg);
    const std::size_t padded_seg = padded_segment_size(variant, seg_size, cfg);
    const std::size_t segments = std::max<std::size_t>(1, (input.size() + seg_size - 1) / seg_size);
    const bool grouped = variant == ScanVariant::Warp16 || variant == ScanVariant::Strided16N;
    const std::size_t padded_segments = grouped ? round_up(segments, kSegmentsPerGroup) : segments;

    std::vector<Half> buf(padded_segments * padded_seg, kHalfZero);
    for (std::size_t s = 0; s < segments; ++s) {
        const std::size_t begin = s * seg_size;
        const std::size_t len = std::min(seg_size, input.size() - std::min(begin, input.size()));
        std::copy_n(input.begin() + static_cast<std::ptrdiff_t>(begin), len,
                    buf.begin() + static_cast<std::ptrdiff_t>(s * padded_seg));
    }
    const std::span<const Half> data(buf);
    std::vector<Acc> scanned(buf.size());

    const auto coarsen = static_cast<std::size_t>(cfg.coarsening);
    auto run_units = [&](std::size_t units, std::size_t unit_len, auto&& unit_body) {
        launcher.begin_pass();
        launcher.parallel_for((units + coarsen - 1) / coarsen, [&](std::size_t t, Engine& engine) {
            for (std::size_t u = t * coarsen; u < std::min(units, (t + 1) * coarsen); ++u) {
                const auto r = unit_body(data.subspan(u * unit_len, unit_len), engine);
                std::copy(r.begin(), r.end(), scanned.begin() + static_cast<std::ptrdiff_t>(u * unit_len));
            }
        });
    };

    const std::size_t group = kSegmentsPerGroup * padded_seg;
    switch (variant) {
    case ScanVariant::Warp16:
        run_units(padded_segments / kSegmentsPerGroup, kTileElems,
                  [&](std::span<const Half> tile, Engine& e) { return scan_16<Acc>(tile, e); });
        break;
    case ScanVariant::Strided16N:
        run_units(padded_segments / kSegmentsPerGroup, group, [&](std::span<const Half> grp, Engine& e) {
            return scan_16n<Acc>(grp, padded_seg, e);
        });
        break;
    case ScanVariant::Warp256:
        run_units(padded_segments, padded_seg,
                  [&](std::span<const Half> seg, Engine& e) { return scan_256<Acc>(seg, e); });
        break;
    case ScanVariant::Warp256N:
        run_units(padded_segments, padded_seg, [&](std::span<const Half> seg, Engine& e) {
            return scan_256n<Acc>(seg, padded_seg / kTileElems, e);
        });
        break;
    case ScanVariant::Block256N:
        scanned = block_scan_256n<Acc>(data, padded_seg, cfg, launcher);
        break;
    case ScanVariant::GridThreePass:
        scanned = grid_scan<Acc>(data, padded_seg, launcher,
                                 {kTileElems * static_cast<std::size_t>(cfg.warps_per_block)});
        break;
    }

    ScanResult<Acc> result;
    result.padded_seg_size = padded_seg;
    result.padded_elements = buf.size();
    result.values.resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i)
        result.values[i] = scanned[(i / seg_size) * padded_seg + i % seg_size];
    return result;
}

#define TCU_INSTANTIATE_SCAN(Acc)                                                                  \
    template std::vector<Acc> scan_16<Acc>(std::span<const Half>, Engine&);                       \
    template std::vector<Acc> scan_256<Acc>(std::span<const Half>, Engine&);                      \
    template std::vector<Acc> scan_256n<Acc>(std::span<const Half>, std::size_t, Engine&);        \
    template std::vector<Acc> scan_16n<Acc>(std::span<const Half>, std::size_t, Engine&,          \
                                            const CarryObserver<Acc>&);                           \
    template std::array<Acc, 16> last_column_scan_16<Acc>(const Fragment<Acc>&, Engine&, Acc);    \
    template std::vector<Acc> block_scan_256n<Acc>(std::span<const Half>, std::size_t,            \
                                                   const BlockConfig&, Launcher&,                 \
                                                   std::vector<Acc>*);                            \
    template std::vector<Acc> grid_scan<Acc>(std::span<const Half>, std::size_t, Launcher&,       \
                                             const GridScanConfig&);                              \
    template ScanResult<Acc> segmented_scan<Acc>(std::span<const Half>, std::size_t, ScanVariant, \
                                                 const BlockConfig&, Launcher&);

TCU_INSTANTIATE_SCAN(Half)
TCU_INSTANTIATE_SCAN(float)

#undef TCU_INSTANTIATE_SCAN

} // namespace tcu

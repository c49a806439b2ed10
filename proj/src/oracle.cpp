#include "tcu/oracle.hpp"

#include "tcu/error.hpp"

#include <string>

namespace tcu {

namespace {

void require_segments(std::size_t length, std::size_t seg_size)
{
    if (seg_size == 0 || length % seg_size != 0)
        throw Error(Errc::BadLength, "length " + std::to_string(length) +
                                         " is not a multiple of segment size " + std::to_string(seg_size));
}

void require_lanes(std::size_t n)
{
    if (n != kShuffleLanes)
        throw Error(Errc::BadLength, "shuffle primitives take exactly 32 lanes, got " + std::to_string(n));
}

} // namespace

std::vector<double> oracle_segmented_reduce(std::span<const Half> input, std::size_t seg_size,
                                            OracleMode mode)
{
    require_segments(input.size(), seg_size);
    std::vector<double> sums;
    sums.reserve(input.size() / seg_size);
    for (std::size_t base = 0; base < input.size(); base += seg_size) {
        if (mode == OracleMode::ExactWide) {
            double s = 0.0;
            for (std::size_t i = 0; i < seg_size; ++i)
                s += to_f64(input[base + i]);
            sums.push_back(s);
        } else {
            Half s = kHalfZero;
            for (std::size_t i = 0; i < seg_size; ++i)
                s = add(s, input[base + i]);
            sums.push_back(to_f64(s));
        }
    }
    return sums;
}

std::vector<double> oracle_segmented_scan(std::span<const Half> input, std::size_t seg_size,
                                          OracleMode mode, bool inclusive)
{
    require_segments(input.size(), seg_size);
    std::vector<double> out(input.size());
    for (std::size_t base = 0; base < input.size(); base += seg_size) {
        double wide = 0.0;
        Half narrow = kHalfZero;
        for (std::size_t i = 0; i < seg_size; ++i) {
            const double before = mode == OracleMode::ExactWide ? wide : to_f64(narrow);
            wide += to_f64(input[base + i]);
            narrow = add(narrow, input[base + i]);
            const double after = mode == OracleMode::ExactWide ? wide : to_f64(narrow);
            out[base + i] = inclusive ? after : before;
        }
    }
    return out;
}

std::pair<Half, ShuffleCost> shuffle_warp_reduce(std::span<const Half> vals)
{
    require_lanes(vals.size());
    std::array<Half, kShuffleLanes> lane{};
    std::copy(vals.begin(), vals.end(), lane.begin());
    ShuffleCost cost;
    for (std::size_t offset = kShuffleLanes / 2; offset > 0; offset /= 2) {
        // out-of-range source lanes return the caller's own value
        std::array<Half, kShuffleLanes> n{};
        for (std::size_t l = 0; l < kShuffleLanes; ++l)
            n[l] = l + offset < kShuffleLanes ? lane[l + offset] : lane[l];
        for (std::size_t l = 0; l < kShuffleLanes; ++l)
            lane[l] = add(lane[l], n[l]);
        ++cost.shuffle_ops;
        ++cost.add_ops;
        ++cost.steps;
    }
    return {lane[0], cost};
}

std::pair<std::vector<Half>, ShuffleCost> shuffle_warp_scan(std::span<const Half> vals)
{
    require_lanes(vals.size());
    std::vector<Half> lane(vals.begin(), vals.end());
    ShuffleCost cost;
    for (std::size_t offset = 1; offset < kShuffleLanes; offset *= 2) {
        std::vector<Half> n(kShuffleLanes);
        for (std::size_t l = 0; l < kShuffleLanes; ++l)
            n[l] = l >= offset ? lane[l - offset] : lane[l];
        for (std::size_t l = offset; l < kShuffleLanes; ++l)
            lane[l] = add(lane[l], n[l]);
        ++cost.shuffle_ops;
        ++cost.add_ops;
        ++cost.steps;
    }
    return {std::move(lane), cost};
}

} // namespace tcu

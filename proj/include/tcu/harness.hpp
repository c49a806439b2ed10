#pragma once

// Planning, file IO, checking and cost reporting behind the command-line tool.

#include "tcu/counters.hpp"
#include "tcu/reduce.hpp"
#include "tcu/scan.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tcu {

enum class Op : std::uint8_t { Reduce, Scan };

std::string_view to_string(Op op) noexcept;

struct Thresholds {
    std::size_t warp = 256;         // below: 16N kernels
    std::size_t block = std::size_t{1} << 15; // above: block-level kernels
};

// Defaults, with TCU_THRESHOLD_BLOCK applied if set. Throws BadConfig on a
// malformed value.
Thresholds thresholds_from_env();

struct ExecPlan {
    Op op = Op::Reduce;
    ReduceVariant reduce = ReduceVariant::WorkEfficient256N;
    ScanVariant scan = ScanVariant::Warp256N;
    BlockConfig block{};
    TileShape shape = kTile16x16x16;

    std::string_view variant_name() const noexcept;
};

// Pure function of its arguments. n_elements only matters for the
// single-segment case, which goes to the grid kernels once it exceeds the
// block threshold; pass 0 when unknown.
ExecPlan select_algorithm(Op op, std::size_t seg_size, std::size_t n_elements = 0,
                          const Thresholds& t = {});

// Plan for a named variant; throws BadConfig on an unknown name.
ExecPlan plan_for(Op op, std::string_view name);

enum class InputFormat : std::uint8_t { F16, Text };

InputFormat infer_format(const std::string& path);
std::vector<Half> read_values(const std::string& path, InputFormat fmt);
std::vector<Half> parse_text_values(std::istream& in);
// Text output is the exact decimal value; f16 output rounds to binary16.
void write_values(const std::string& path, InputFormat fmt, const std::vector<double>& values);

enum class Precision : std::uint8_t { Half, Float };

enum class CheckStatus : std::uint8_t { Pass, Fail, Skipped };
std::string_view to_string(CheckStatus s) noexcept;

struct RunOptions {
    Op op = Op::Reduce;
    std::size_t seg_size = 0;
    std::optional<ExecPlan> plan; // empty: auto
    bool check = false;
    bool strict_wmma = false;
    unsigned threads = 1;
    Precision precision = Precision::Half;
    Thresholds thresholds{};
};

struct RunReport {
    Op op = Op::Reduce;
    std::size_t seg_size = 0;
    std::size_t n_elements = 0;
    std::string variant;
    CostCounters counters{};
    std::uint64_t cycle_estimate = 0;
    std::uint64_t baseline_cycles = 0;
    CheckStatus check = CheckStatus::Skipped;
    std::uint64_t passes = 0;
    std::size_t padded_seg_size = 0;
    std::size_t padding_elements = 0; // zeros appended by the kernels
    double wall_seconds = 0.0;
};

struct RunOutput {
    RunReport report;
    std::vector<double> values; // sums for reduce, prefix values for scan
};

RunOutput run(const std::vector<Half>& input, const RunOptions& options);

// Accepts out when |out - exact| <= 2^-8 * sum|x| over the contributing
// elements; exact for integer data far below that bound.
bool check_against_oracle(Op op, const std::vector<Half>& input, std::size_t seg_size,
                          const std::vector<double>& out);

// Shuffle-instruction cost of the same work.
std::uint64_t baseline_cycles(Op op, std::size_t padded_elements);

void emit_cost_csv(std::ostream& os, const std::vector<RunReport>& reports, bool header = true);

void print_report(std::ostream& os, const RunReport& r);

} // namespace tcu

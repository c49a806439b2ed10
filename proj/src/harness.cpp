#include "tcu/harness.hpp"

#include "tcu/error.hpp"
#include "tcu/oracle.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace tcu {

std::string_view to_string(Op op) noexcept { return op == Op::Reduce ? "reduce" : "scan"; }

std::string_view to_string(CheckStatus s) noexcept
{
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
    }
    return "?";
}

Thresholds thresholds_from_env()
{
    Thresholds t;
    if (const char* v = std::getenv("TCU_THRESHOLD_BLOCK")) {
        const std::string_view s(v);
        std::size_t value = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc() || p != s.data() + s.size() || value == 0)
            throw Error(Errc::BadConfig, "TCU_THRESHOLD_BLOCK: not a positive integer: " + std::string(s));
        t.block = value;
    }
    return t;
}

std::string_view ExecPlan::variant_name() const noexcept
{
    return op == Op::Reduce ? to_string(reduce) : to_string(scan);
}

ExecPlan select_algorithm(Op op, std::size_t seg_size, std::size_t n_elements, const Thresholds& t)
{
    ExecPlan plan;
    plan.op = op;
    const bool single_segment = n_elements != 0 && seg_size >= n_elements;
    if (op == Op::Reduce) {
        if (seg_size <= 16)
            plan.reduce = ReduceVariant::Warp16;
        else if (seg_size < t.warp)
            plan.reduce = ReduceVariant::Strided16N;
        else if (seg_size <= t.block)
            plan.reduce = ReduceVariant::WorkEfficient256N;
        else
            plan.reduce = single_segment ? ReduceVariant::GridTwoPass : ReduceVariant::Block256N;
    } else {
        if (seg_size <= 16)
            plan.scan = ScanVariant::Warp16;
        else if (seg_size < t.warp)
            plan.scan = ScanVariant::Strided16N;
        else if (seg_size == 256)
            plan.scan = ScanVariant::Warp256;
        else if (seg_size <= t.block)
            plan.scan = ScanVariant::Warp256N;
        else
            plan.scan = single_segment ? ScanVariant::GridThreePass : ScanVariant::Block256N;
    }
    return plan;
}

ExecPlan plan_for(Op op, std::string_view name)
{
    ExecPlan plan;
    plan.op = op;
    const bool ok = op == Op::Reduce ? parse_reduce_variant(name, plan.reduce)
                                     : parse_scan_variant(name, plan.scan);
    if (!ok)
        throw Error(Errc::BadConfig, "unknown " + std::string(to_string(op)) + " algorithm: " + std::string(name));
    return plan;
}

InputFormat infer_format(const std::string& path)
{
    const auto dot = path.rfind('.');
    return dot != std::string::npos && path.substr(dot) == ".f16" ? InputFormat::F16 : InputFormat::Text;
}

std::vector<Half> parse_text_values(std::istream& in)
{
    std::vector<Half> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos)
            continue;
        const auto last = line.find_last_not_of(" \t\r");
        Half h;
        if (!parse_half(std::string_view(line).substr(first, last - first + 1), h))
            throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": not a number: " + line);
        out.push_back(h);
    }
    return out;
}

std::vector<Half> read_values(const std::string& path, InputFormat fmt)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoError, "cannot open " + path);
    if (fmt == InputFormat::Text)
        return parse_text_values(in);

    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 2 != 0)
        throw Error(Errc::ParseError, path + ": odd byte count for binary16 data");
    std::vector<Half> out(bytes.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto lo = static_cast<unsigned char>(bytes[2 * i]);
        const auto hi = static_cast<unsigned char>(bytes[2 * i + 1]);
        out[i] = Half::from_bits(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    return out;
}

void write_values(const std::string& path, InputFormat fmt, const std::vector<double>& values)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::IoError, "cannot open " + path + " for writing");
    if (fmt == InputFormat::F16) {
        for (double v : values) {
            const std::uint16_t b = from_f64(v).bits();
            const char bytes[2] = {static_cast<char>(b & 0xFF), static_cast<char>(b >> 8)};
            out.write(bytes, 2);
        }
    } else {
        char buf[64];
        for (double v : values) {
            const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
            out.write(buf, p - buf);
            out.put('\n');
        }
    }
    if (!out)
        throw Error(Errc::IoError, "write failed: " + path);
}

std::uint64_t baseline_cycles(Op op, std::size_t padded_elements)
{
    if (op == Op::Reduce)
        return shuffle_reduce_256_cost() * ((padded_elements + 255) / 256);
    // one 5-step shuffle scan per 32 elements
    constexpr std::uint64_t kScanSteps = 5;
    return ShuffleCost::kCyclesPerStep * kScanSteps * ((padded_elements + kShuffleLanes - 1) / kShuffleLanes);
}

bool check_against_oracle(Op op, const std::vector<Half>& input, std::size_t seg_size,
                          const std::vector<double>& out)
{
    const std::size_t segments = std::max<std::size_t>(1, (input.size() + seg_size - 1) / seg_size);
    std::vector<Half> padded(segments * seg_size, kHalfZero);
    std::copy(input.begin(), input.end(), padded.begin());
    std::vector<Half> magnitude(padded.size());
    for (std::size_t i = 0; i < padded.size(); ++i)
        magnitude[i] = Half::from_bits(static_cast<std::uint16_t>(padded[i].bits() & 0x7FFF));

    const double rel = std::ldexp(1.0, -8);
    auto within = [rel](double got, double exact, double bound) {
        if (std::isnan(exact))
            return std::isnan(got);
        if (std::isinf(exact))
            return got == exact;
        return std::isfinite(got) && std::abs(got - exact) <= rel * bound;
    };

    if (op == Op::Reduce) {
        const auto exact = oracle_segmented_reduce(padded, seg_size, OracleMode::ExactWide);
        const auto bound = oracle_segmented_reduce(magnitude, seg_size, OracleMode::ExactWide);
        if (out.size() != exact.size())
            return false;
        for (std::size_t s = 0; s < exact.size(); ++s)
            if (!within(out[s], exact[s], bound[s]))
                return false;
        return true;
    }
    const auto exact = oracle_segmented_scan(padded, seg_size, OracleMode::ExactWide);
    const auto bound = oracle_segmented_scan(magnitude, seg_size, OracleMode::ExactWide);
    if (out.size() != input.size())
        return false;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!within(out[i], exact[i], bound[i]))
            return false;
    return true;
}

namespace {

template <typename Acc>
std::vector<double> widen(const std::vector<Acc>& v)
{
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if constexpr (std::is_same_v<Acc, Half>)
            out[i] = to_f64(v[i]);
        else
            out[i] = static_cast<double>(v[i]);
    }
    return out;
}

template <typename Acc>
RunOutput run_typed(const std::vector<Half>& input, const RunOptions& o, const ExecPlan& plan)
{
    LaunchOptions lo;
    lo.threads = o.threads;
    lo.engine.strict_wmma = o.strict_wmma;
    Launcher launcher(lo);

    RunOutput result;
    auto& r = result.report;
    r.op = o.op;
    r.seg_size = o.seg_size;
    r.n_elements = input.size();
    r.variant = std::string(plan.variant_name());

    const auto start = std::chrono::steady_clock::now();
    std::size_t padded_elements = 0;
    if (o.op == Op::Reduce) {
        auto res = segmented_reduce<Acc>(input, o.seg_size, plan.reduce, plan.block, launcher);
        result.values = widen(res.sums);
        r.padded_seg_size = res.padded_seg_size;
        padded_elements = res.padded_elements;
    } else {
        auto res = segmented_scan<Acc>(input, o.seg_size, plan.scan, plan.block, launcher);
        result.values = widen(res.values);
        r.padded_seg_size = res.padded_seg_size;
        padded_elements = res.padded_elements;
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    r.counters = launcher.counters();
    r.passes = launcher.passes();
    r.cycle_estimate = r.counters.cycle_estimate();
    r.padding_elements = padded_elements - std::min(padded_elements, input.size());
    r.baseline_cycles = baseline_cycles(o.op, padded_elements);
    if (o.check)
        r.check = check_against_oracle(o.op, input, o.seg_size, result.values) ? CheckStatus::Pass
                                                                               : CheckStatus::Fail;
    return result;
}

} // namespace

RunOutput run(const std::vector<Half>& input, const RunOptions& options)
{
    if (options.seg_size == 0)
        throw Error(Errc::BadConfig, "segment size must be at least 1");
    if (input.empty())
        throw Error(Errc::BadLength, "empty input");
    ExecPlan plan = options.plan ? *options.plan
                                 : select_algorithm(options.op, options.seg_size, input.size(), options.thresholds);
    plan.op = options.op;
    return options.precision == Precision::Half ? run_typed<Half>(input, options, plan)
                                                : run_typed<float>(input, options, plan);
}

void emit_cost_csv(std::ostream& os, const std::vector<RunReport>& reports, bool header)
{
    if (header)
        os << "op,seg_size,n,variant,mma,tile_loads,tile_stores,cycles,baseline_cycles,check\n";
    for (const auto& r : reports) {
        os << to_string(r.op) << ',' << r.seg_size << ',' << r.n_elements << ',' << r.variant << ','
           << r.counters.mma_count << ',' << r.counters.tile_loads << ',' << r.counters.tile_stores
           << ',' << r.cycle_estimate << ',' << r.baseline_cycles << ',' << to_string(r.check) << '\n';
    }
    if (!os)
        throw Error(Errc::IoError, "failed writing cost CSV");
}

void print_report(std::ostream& os, const RunReport& r)
{
    os << to_string(r.op) << " seg=" << r.seg_size << " n=" << r.n_elements << " variant=" << r.variant
       << " padded_seg=" << r.padded_seg_size << " padding=" << r.padding_elements
       << " passes=" << r.passes << '\n'
       << "  " << r.counters << '\n'
       << "  cycles=" << r.cycle_estimate << " baseline_cycles=" << r.baseline_cycles
       << " check=" << to_string(r.check) << " wall=" << std::fixed << std::setprecision(3)
       << r.wall_seconds << "s\n";
}

} // namespace tcu

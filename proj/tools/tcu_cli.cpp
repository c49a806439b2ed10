// tcu: segmented reduce/scan over binary16 files on the emulated tensor core.

#include "tcu/error.hpp"
#include "tcu/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;

struct Args {
    std::string input;
    std::string output;
    std::size_t seg_size = 0;
    std::string algo = "auto";
    int wpb = 4;
    int coarsening = 1;
    bool check = false;
    std::string cost_csv;
    std::string format;
    bool strict = false;
    unsigned threads = 1;
    std::string precision = "half";
    std::optional<std::size_t> block_threshold;
};

void add_options(CLI::App* cmd, Args& a)
{
    cmd->add_option("--input", a.input, "input file (.f16 binary or text)")->required();
    cmd->add_option("--output", a.output, "output file")->required();
    cmd->add_option("--segment-size", a.seg_size, "segment length")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--algo", a.algo, "variant name or auto");
    cmd->add_option("--wpb", a.wpb, "warps per block")->check(CLI::Range(1, 16));
    cmd->add_option("--coarsening", a.coarsening, "work units per warp task")->check(CLI::PositiveNumber);
    cmd->add_flag("--check", a.check, "compare against the scalar oracle");
    cmd->add_option("--cost-csv", a.cost_csv, "append a cost row to this CSV");
    cmd->add_option("--format", a.format, "f16 or text, overriding the extension")
        ->check(CLI::IsMember({"f16", "text"}));
    cmd->add_flag("--strict-wmma", a.strict, "route constants and extracts through memory");
    cmd->add_option("--threads", a.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--precision", a.precision, "accumulator precision")
        ->check(CLI::IsMember({"half", "float"}));
    cmd->add_option("--block-threshold", a.block_threshold, "segment size above which block kernels are used")
        ->check(CLI::PositiveNumber);
}

void append_csv(const std::string& path, const tcu::RunReport& report)
{
    bool fresh = true;
    {
        std::ifstream probe(path);
        fresh = !probe || probe.peek() == std::ifstream::traits_type::eof();
    }
    std::ofstream out(path, std::ios::app);
    if (!out)
        throw tcu::Error(tcu::Errc::IoError, "cannot open " + path);
    tcu::emit_cost_csv(out, {report}, fresh);
}

int execute(tcu::Op op, const Args& a)
{
    tcu::RunOptions o;
    o.op = op;
    o.seg_size = a.seg_size;
    o.check = a.check;
    o.strict_wmma = a.strict;
    o.threads = a.threads;
    o.precision = a.precision == "float" ? tcu::Precision::Float : tcu::Precision::Half;
    o.thresholds = tcu::thresholds_from_env();
    if (a.block_threshold)
        o.thresholds.block = *a.block_threshold;

    const auto in_fmt = a.format.empty() ? tcu::infer_format(a.input)
                                         : (a.format == "f16" ? tcu::InputFormat::F16 : tcu::InputFormat::Text);
    const auto out_fmt = a.format.empty() ? tcu::infer_format(a.output) : in_fmt;
    const auto input = tcu::read_values(a.input, in_fmt);
    auto plan = a.algo == "auto" ? tcu::select_algorithm(op, a.seg_size, input.size(), o.thresholds)
                                 : tcu::plan_for(op, a.algo);
    plan.block.warps_per_block = a.wpb;
    plan.block.coarsening = a.coarsening;
    o.plan = plan;

    const auto result = tcu::run(input, o);
    tcu::write_values(a.output, out_fmt, result.values);
    tcu::print_report(std::cout, result.report);
    if (!a.cost_csv.empty())
        append_csv(a.cost_csv, result.report);
    return result.report.check == tcu::CheckStatus::Fail ? kExitCheckFailed : kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Segmented reduction and scan on an emulated tensor core"};
    app.require_subcommand(1);
    Args reduce_args, scan_args;
    auto* reduce = app.add_subcommand("reduce", "segmented sum");
    auto* scan = app.add_subcommand("scan", "segmented inclusive prefix sum");
    add_options(reduce, reduce_args);
    add_options(scan, scan_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (reduce->parsed())
            return execute(tcu::Op::Reduce, reduce_args);
        return execute(tcu::Op::Scan, scan_args);
    } catch (const tcu::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "steinbounds/errors.hpp"
#include "steinbounds/experiment.hpp"
#include "steinbounds/selftest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitComputation = 2;
constexpr int kExitSelftest = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw stein::InvalidInput("cannot read spec file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_output(const std::string& content, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw stein::InvalidInput("cannot open output file '" + path + "'");
    out << content;
    if (!out) throw stein::InvalidInput("cannot write output file '" + path + "'");
}

std::optional<std::uint64_t> seed_from_env() {
    const char* raw = std::getenv(stein::kSeedEnvVar);
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    std::uint64_t value = 0;
    const char* end = raw + std::string_view(raw).size();
    const auto result = std::from_chars(raw, end, value);
    if (result.ec != std::errc{} || result.ptr != end)
        throw stein::InvalidInput(std::string(stein::kSeedEnvVar) +
                                  " must be a non-negative integer, got '" + raw + "'");
    return value;
}

void print_error(const char* kind, const std::string& message) {
    nlohmann::json record;
    record["error"] = kind;
    record["message"] = message;
    std::cerr << record.dump() << "\n";
}

struct CommonArgs {
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::string out_path;
    std::string format;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_mc_flags) {
    cmd->add_option("spec", args.spec_path, "Experiment spec (JSON file)")->required();
    cmd->add_option("--out", args.out_path, "Output path ('-' for stdout)");
    cmd->add_option("--format", args.format, "Output format")
        ->check(CLI::IsMember({"csv", "human"}));
    if (with_mc_flags) {
        cmd->add_option("--seed", args.seed, "RNG seed (overrides spec and environment)");
        cmd->add_option("--samples", args.samples, "Monte Carlo sample budget per estimate")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--threads", args.threads, "Worker threads for independent cells")
            ->check(CLI::PositiveNumber);
    }
}

// Output destination and format: flags win over the spec's output block.
std::pair<std::string, std::string> resolve_output(const stein::ExperimentSpec& spec,
                                                   const CommonArgs& args) {
    std::string path = !args.out_path.empty() ? args.out_path
                       : spec.output           ? spec.output->path
                                               : "-";
    std::string format = !args.format.empty() ? args.format
                         : spec.output         ? spec.output->format
                                               : "csv";
    return {path, format};
}

int run(int argc, char** argv) {
    CLI::App app{"Error-exponent bounds for simple binary hypothesis testing"};
    app.require_subcommand(1);

    CommonArgs report_args;
    CLI::App* report = app.add_subcommand(
        "report", "Bounds and exact/MC error values for one model over an alpha grid");
    add_common(report, report_args, true);

    CommonArgs sweep_args;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "The same report across a scale grid (sample size or observation time)");
    add_common(sweep, sweep_args, true);

    CommonArgs curve_args;
    CLI::App* curve = app.add_subcommand(
        "np-curve", "Vertices of the exact operating characteristic of a discrete model");
    add_common(curve, curve_args, false);

    std::optional<std::uint64_t> selftest_seed;
    CLI::App* selftest = app.add_subcommand("selftest", "Run internal invariant suites");
    selftest->add_option("--seed", selftest_seed, "RNG seed for generated test models");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (selftest->parsed()) {
            std::uint64_t seed = stein::kDefaultSeed;
            if (selftest_seed)
                seed = *selftest_seed;
            else if (const auto env = seed_from_env())
                seed = *env;
            const auto results = stein::run_selftest(seed);
            std::cout << stein::render_selftest(results);
            return stein::selftest_passed(results) ? kExitOk : kExitSelftest;
        }

        const CommonArgs& args = report->parsed()  ? report_args
                                 : sweep->parsed() ? sweep_args
                                                   : curve_args;
        const stein::ExperimentSpec spec = stein::parse_spec(read_file(args.spec_path));
        const auto [out_path, format] = resolve_output(spec, args);

        if (curve->parsed()) {
            const auto rows = stein::np_curve(spec);
            write_output(format == "csv" ? stein::render_curve_csv(rows)
                                         : stein::render_curve_human(rows),
                         out_path);
            return kExitOk;
        }

        const stein::RunOptions options =
            stein::resolve_options(spec, args.seed, args.samples, seed_from_env(), args.threads);
        const auto rows = report->parsed() ? stein::run_report(spec, options)
                                           : stein::run_sweep(spec, options);
        write_output(format == "csv" ? stein::render_csv(rows) : stein::render_human(rows),
                     out_path);
        return kExitOk;
    } catch (const stein::ValidationError& err) {
        print_error(err.kind(), err.what());
        return kExitValidation;
    } catch (const stein::ComputationError& err) {
        print_error(err.kind(), err.what());
        return kExitComputation;
    } catch (const std::exception& err) {
        print_error("InternalError", err.what());
        return kExitComputation;
    }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }

#include "steinbounds/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <string_view>
#include <system_error>
#include <thread>
#include <utility>

#include <json.hpp>

#include "steinbounds/divergence.hpp"
#include "steinbounds/errors.hpp"

namespace stein {
namespace {

using nlohmann::json;

constexpr const char* kCsvHeader =
    "family,scale,alpha,d,r1,mu0,ln_beta_lower,ln_beta_upper_mu0,"
    "ln_beta_upper_cheb,ln_beta_value,value_kind,value_stderr,gap_per_sample,"
    "condition_ratio,clamped_mu0,clamped_cheb,seed";
constexpr int kCsvColumns = 17;

// Disjoint stream ids per cell keep every Monte Carlo quantity independent
// of evaluation order and thread count.
constexpr std::uint64_t kStreamsPerCell = 8;
constexpr std::uint64_t kSlotMu0 = 0;
constexpr std::uint64_t kSlotBetaCal = 1;
constexpr std::uint64_t kSlotBetaEval = 2;

[[noreturn]] void fail_field(const std::string& where, const std::string& message) {
    throw InvalidInput("spec field '" + where + "': " + message);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) fail_field(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
    }
}

std::vector<double> number_array(const json& value, const std::string& where) {
    if (!value.is_array() || value.empty()) fail_field(where, "expected a non-empty number array");
    std::vector<double> out;
    out.reserve(value.size());
    for (const auto& item : value) {
        if (!item.is_number()) fail_field(where, "expected a non-empty number array");
        out.push_back(item.get<double>());
    }
    return out;
}

double number_field(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key) || !obj[key].is_number())
        fail_field(where + "." + key, "expected a number");
    return obj[key].get<double>();
}

std::int64_t integer_field(const json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key) || !obj[key].is_number_integer())
        fail_field(where + "." + key, "expected an integer");
    return obj[key].get<std::int64_t>();
}

FiniteDistPair parse_pair(const json& obj, const std::string& where) {
    if (!obj.is_object()) fail_field(where, "expected an object with 'p' and 'q'");
    if (!obj.contains("p") || !obj.contains("q")) fail_field(where, "requires 'p' and 'q'");
    return FiniteDistPair(number_array(obj["p"], where + ".p"),
                          number_array(obj["q"], where + ".q"));
}

Model parse_model(const json& root) {
    static constexpr const char* kFamilies[] = {"iid_discrete", "independent_discrete",
                                                "gaussian_scale", "poisson_piecewise"};
    int present = 0;
    for (const char* family : kFamilies) present += root.contains(family) ? 1 : 0;
    if (present != 1)
        throw InvalidInput(
            "spec requires exactly one of iid_discrete, independent_discrete, "
            "gaussian_scale, poisson_piecewise");

    if (root.contains("iid_discrete")) {
        const json& obj = root["iid_discrete"];
        check_keys(obj, "iid_discrete", {"p", "q", "n"});
        std::int64_t n = integer_field(obj, "iid_discrete", "n");
        return IidProductModel(parse_pair(obj, "iid_discrete"), n);
    }
    if (root.contains("independent_discrete")) {
        const json& obj = root["independent_discrete"];
        check_keys(obj, "independent_discrete", {"components"});
        if (!obj.contains("components") || !obj["components"].is_array() ||
            obj["components"].empty())
            fail_field("independent_discrete.components", "expected a non-empty array");
        std::vector<FiniteDistPair> components;
        components.reserve(obj["components"].size());
        std::size_t index = 0;
        for (const auto& comp : obj["components"]) {
            components.push_back(parse_pair(
                comp, "independent_discrete.components[" + std::to_string(index) + "]"));
            ++index;
        }
        return IndependentProductModel(std::move(components));
    }
    if (root.contains("gaussian_scale")) {
        const json& obj = root["gaussian_scale"];
        check_keys(obj, "gaussian_scale", {"eigenvalues"});
        if (!obj.contains("eigenvalues"))
            fail_field("gaussian_scale.eigenvalues", "expected a non-empty number array");
        return GaussianScaleModel(number_array(obj["eigenvalues"], "gaussian_scale.eigenvalues"));
    }
    const json& obj = root["poisson_piecewise"];
    check_keys(obj, "poisson_piecewise", {"pieces"});
    if (!obj.contains("pieces") || !obj["pieces"].is_array() || obj["pieces"].empty())
        fail_field("poisson_piecewise.pieces", "expected a non-empty array");
    std::vector<PoissonPiecewiseModel::Piece> pieces;
    pieces.reserve(obj["pieces"].size());
    std::size_t index = 0;
    for (const auto& piece : obj["pieces"]) {
        const std::string where = "poisson_piecewise.pieces[" + std::to_string(index) + "]";
        if (!piece.is_object()) fail_field(where, "expected an object with len, p, q");
        check_keys(piece, where, {"len", "p", "q"});
        pieces.push_back({number_field(piece, where, "len"), number_field(piece, where, "p"),
                          number_field(piece, where, "q")});
        ++index;
    }
    return PoissonPiecewiseModel(std::move(pieces));
}

SweepDirective parse_sweep(const json& obj, const Model& model) {
    if (!obj.is_object()) fail_field("sweep", "expected an object with 'n' or 'T'");
    check_keys(obj, "sweep", {"n", "T"});
    const bool has_n = obj.contains("n");
    const bool has_t = obj.contains("T");
    if (has_n == has_t) fail_field("sweep", "requires exactly one of 'n' or 'T'");

    SweepDirective sweep;
    if (has_n) {
        if (std::holds_alternative<PoissonPiecewiseModel>(model))
            fail_field("sweep.n", "does not apply to poisson_piecewise; use 'T'");
        sweep.kind = SweepDirective::Kind::Replicate;
        sweep.values = number_array(obj["n"], "sweep.n");
        for (double v : sweep.values)
            if (v < 1 || v != std::floor(v)) fail_field("sweep.n", "values must be integers >= 1");
    } else {
        if (!std::holds_alternative<PoissonPiecewiseModel>(model))
            fail_field("sweep.T", "only applies to poisson_piecewise; use 'n'");
        sweep.kind = SweepDirective::Kind::TotalTime;
        sweep.values = number_array(obj["T"], "sweep.T");
        for (double v : sweep.values)
            if (!(v > 0) || !std::isfinite(v)) fail_field("sweep.T", "values must be positive");
    }
    for (std::size_t i = 1; i < sweep.values.size(); ++i)
        if (!(sweep.values[i] > sweep.values[i - 1]))
            fail_field(has_n ? "sweep.n" : "sweep.T", "values must be strictly increasing");
    return sweep;
}

// Builds the model at one sweep grid point: replicate discrete/Gaussian
// structure n times, or rescale the counting model's segment lengths to
// total time T.
Model scaled_model(const Model& base, const SweepDirective& sweep, double value) {
    if (sweep.kind == SweepDirective::Kind::TotalTime) {
        const auto& pm = std::get<PoissonPiecewiseModel>(base);
        const double factor = value / pm.total_time();
        std::vector<PoissonPiecewiseModel::Piece> pieces = pm.pieces;
        for (auto& piece : pieces) piece.len *= factor;
        return PoissonPiecewiseModel(std::move(pieces));
    }
    const auto n = static_cast<std::size_t>(value);
    if (const auto* iid = std::get_if<IidProductModel>(&base))
        return IidProductModel(iid->base, static_cast<std::int64_t>(n));
    if (const auto* pair = std::get_if<FiniteDistPair>(&base))
        return IidProductModel(*pair, static_cast<std::int64_t>(n));
    if (const auto* ind = std::get_if<IndependentProductModel>(&base)) {
        std::vector<FiniteDistPair> components;
        components.reserve(ind->components.size() * n);
        for (std::size_t i = 0; i < n; ++i)
            components.insert(components.end(), ind->components.begin(), ind->components.end());
        return IndependentProductModel(std::move(components));
    }
    const auto& gauss = std::get<GaussianScaleModel>(base);
    std::vector<double> eigenvalues;
    eigenvalues.reserve(gauss.eigenvalues.size() * n);
    for (std::size_t i = 0; i < n; ++i)
        eigenvalues.insert(eigenvalues.end(), gauss.eigenvalues.begin(),
                           gauss.eigenvalues.end());
    return GaussianScaleModel(std::move(eigenvalues));
}

struct Cell {
    Model model;
    double scale;
    Alpha alpha;
    std::size_t index;
};

ResultRow evaluate_cell(const Cell& cell, const RunOptions& options) {
    const Model& model = cell.model;
    ResultRow row;
    row.family = family_name(model);
    row.scale = cell.scale;
    row.alpha = cell.alpha.value();
    row.seed = options.seed;

    const LlrMoments moments = llr_moments(model);
    row.d = moments.d;
    row.r1 = moments.r1;
    row.ln_beta_lower = lower_bound_ln_beta(moments.d, cell.alpha);
    const ClampedBound cheb = upper_bound_chebyshev(moments.d, moments.r1, cell.alpha);
    row.ln_beta_upper_cheb = cheb.value;
    row.clamped_cheb = cheb.clamped;
    row.condition_ratio = moments.d > 0
                              ? std::optional<double>(moments.r1 * moments.r1 / moments.d)
                              : std::nullopt;

    const std::uint64_t stream_base = cell.index * kStreamsPerCell;
    bool zero_count = false;
    if (is_discrete(model)) {
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        const double mu0 = mu0_exact(atoms, moments.d, cell.alpha);
        row.mu0 = mu0;
        const ClampedBound upper = upper_bound_mu0(moments.d, mu0);
        row.ln_beta_upper_mu0 = upper.value;
        row.clamped_mu0 = upper.clamped;
        row.ln_beta_value = beta_exact(atoms, cell.alpha).ln_beta;
        row.value_kind = "exact";
        row.value_stderr = 0.0;
    } else {
        const Mu0McResult mu0 = mu0_mc(model, cell.alpha, options.mc_samples, options.seed,
                                       stream_base + kSlotMu0);
        row.mu0 = mu0.value;
        const ClampedBound upper = upper_bound_mu0(moments.d, mu0.value);
        row.ln_beta_upper_mu0 = upper.value;
        row.clamped_mu0 = upper.clamped;
        const BetaMcResult beta =
            beta_mc(model, cell.alpha, options.mc_samples, options.mc_samples, options.seed,
                    stream_base + kSlotBetaCal, stream_base + kSlotBetaEval);
        row.value_kind = "mc";
        zero_count = beta.zero_count;
        if (beta.zero_count) {
            // No Q-draw hit the acceptance region: report the rule-of-three
            // upper bound instead of a spurious -inf.
            row.ln_beta_value = beta.ln_beta_upper_rule_of_three;
            row.value_stderr = std::numeric_limits<double>::quiet_NaN();
        } else {
            row.ln_beta_value = beta.ln_beta;
            row.value_stderr = beta.std_error;
        }
    }
    if (!zero_count && std::isfinite(row.ln_beta_value))
        row.gap_per_sample = std::abs(row.ln_beta_value + moments.d) / cell.scale;
    return row;
}

std::vector<ResultRow> run_cells(const std::vector<Cell>& cells, const RunOptions& options) {
    std::vector<ResultRow> rows(cells.size());
    const int threads =
        std::max(1, std::min<int>(options.threads, static_cast<int>(cells.size())));
    if (threads == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = evaluate_cell(cells[i], options);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                rows[i] = evaluate_cell(cells[i], options);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
    if (first_error) std::rethrow_exception(first_error);
    return rows;
}

double parse_csv_double(std::string_view token, int line, int column) {
    double value = 0;
    const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
    if (result.ec != std::errc{} || result.ptr != token.data() + token.size())
        throw ParseError("csv line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": bad number '" + std::string(token) + "'");
    return value;
}

}  // namespace

ExperimentSpec parse_spec(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ParseError(err.what());
    }
    if (!root.is_object()) throw ParseError("spec root must be a JSON object");
    check_keys(root, "",
               {"iid_discrete", "independent_discrete", "gaussian_scale", "poisson_piecewise",
                "alphas", "sweep", "mc", "output", "spec_version"});

    ExperimentSpec spec{parse_model(root)};

    if (root.contains("spec_version")) {
        if (!root["spec_version"].is_number_integer())
            fail_field("spec_version", "expected an integer");
        spec.spec_version = root["spec_version"].get<int>();
        if (spec.spec_version != 1)
            fail_field("spec_version",
                       "unsupported version " + std::to_string(spec.spec_version));
    }

    if (root.contains("alphas")) {
        for (double a : number_array(root["alphas"], "alphas")) spec.alphas.emplace_back(a);
    } else {
        for (double a : {0.01, 0.05, 0.1, 0.25, 0.5}) spec.alphas.emplace_back(a);
    }

    if (root.contains("sweep")) spec.sweep = parse_sweep(root["sweep"], spec.model);

    if (root.contains("mc")) {
        const json& mc = root["mc"];
        if (!mc.is_object()) fail_field("mc", "expected an object");
        check_keys(mc, "mc", {"n_samples", "seed"});
        if (mc.contains("n_samples")) {
            const std::int64_t n = integer_field(mc, "mc", "n_samples");
            if (n < 2) fail_field("mc.n_samples", "must be >= 2");
            spec.mc_samples = static_cast<std::size_t>(n);
        }
        if (mc.contains("seed")) {
            if (!mc["seed"].is_number_unsigned() && !mc["seed"].is_number_integer())
                fail_field("mc.seed", "expected a non-negative integer");
            const std::int64_t seed = mc["seed"].get<std::int64_t>();
            if (seed < 0) fail_field("mc.seed", "expected a non-negative integer");
            spec.mc_seed = static_cast<std::uint64_t>(seed);
        }
    }

    if (root.contains("output")) {
        const json& out = root["output"];
        if (!out.is_object()) fail_field("output", "expected an object");
        check_keys(out, "output", {"path", "format"});
        OutputSpec output;
        output.path = out.contains("path") && out["path"].is_string()
                          ? out["path"].get<std::string>()
                          : "-";
        output.format = "csv";
        if (out.contains("format")) {
            if (!out["format"].is_string()) fail_field("output.format", "expected a string");
            output.format = out["format"].get<std::string>();
            if (output.format != "csv" && output.format != "human")
                fail_field("output.format", "must be 'csv' or 'human'");
        }
        spec.output = std::move(output);
    }
    return spec;
}

RunOptions resolve_options(const ExperimentSpec& spec, std::optional<std::uint64_t> seed_flag,
                           std::optional<std::size_t> samples_flag,
                           std::optional<std::uint64_t> env_seed, int threads) {
    RunOptions options;
    options.threads = std::max(1, threads);
    options.seed = seed_flag ? *seed_flag
                             : spec.mc_seed ? *spec.mc_seed
                                            : env_seed ? *env_seed : kDefaultSeed;
    options.mc_samples =
        samples_flag ? *samples_flag : spec.mc_samples ? *spec.mc_samples : kDefaultMcSamples;
    return options;
}

std::vector<ResultRow> run_report(const ExperimentSpec& spec, const RunOptions& options) {
    std::vector<Cell> cells;
    cells.reserve(spec.alphas.size());
    const double scale = model_scale(spec.model);
    for (const Alpha alpha : spec.alphas)
        cells.push_back({spec.model, scale, alpha, cells.size()});
    return run_cells(cells, options);
}

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec, const RunOptions& options) {
    if (!spec.sweep) throw InvalidInput("sweep requires a 'sweep' block in the spec");
    std::vector<Cell> cells;
    cells.reserve(spec.sweep->values.size() * spec.alphas.size());
    for (const double value : spec.sweep->values) {
        Model model = scaled_model(spec.model, *spec.sweep, value);
        for (const Alpha alpha : spec.alphas)
            cells.push_back({model, value, alpha, cells.size()});
    }
    return run_cells(cells, options);
}

std::vector<CurveRow> np_curve(const ExperimentSpec& spec, std::size_t cap) {
    if (!is_discrete(spec.model))
        throw ExactUnavailable(
            std::string("np-curve requires a discrete model, got ") + family_name(spec.model));
    const LlrAtomDistribution atoms = llr_atoms_under_p(spec.model, cap);
    const double scale = model_scale(spec.model);
    std::vector<CurveRow> rows;
    for (const CurveVertex& vertex : beta_curve(atoms))
        rows.push_back({family_name(spec.model), scale, vertex.alpha, vertex.beta,
                        vertex.ln_beta});
    return rows;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

namespace {

std::string format_optional(const std::optional<double>& value) {
    return value ? format_double(*value) : "nan";
}

}  // namespace

std::string render_csv(const std::vector<ResultRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const ResultRow& row : rows) {
        out += row.family;
        out += ',';
        out += format_double(row.scale);
        out += ',';
        out += format_double(row.alpha);
        out += ',';
        out += format_double(row.d);
        out += ',';
        out += format_double(row.r1);
        out += ',';
        out += format_optional(row.mu0);
        out += ',';
        out += format_double(row.ln_beta_lower);
        out += ',';
        out += format_optional(row.ln_beta_upper_mu0);
        out += ',';
        out += format_double(row.ln_beta_upper_cheb);
        out += ',';
        out += format_double(row.ln_beta_value);
        out += ',';
        out += row.value_kind;
        out += ',';
        out += format_double(row.value_stderr);
        out += ',';
        out += format_optional(row.gap_per_sample);
        out += ',';
        out += format_optional(row.condition_ratio);
        out += ',';
        out += row.clamped_mu0 ? '1' : '0';
        out += ',';
        out += row.clamped_cheb ? '1' : '0';
        out += ',';
        out += std::to_string(row.seed);
        out += '\n';
    }
    return out;
}

std::string render_human(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    for (const ResultRow& row : rows) {
        out << "[" << row.family << "] scale=" << format_double(row.scale)
            << " alpha=" << format_double(row.alpha) << " seed=" << row.seed << "\n";
        out << "  d=" << format_double(row.d) << "  r1=" << format_double(row.r1)
            << "  condition_ratio=" << format_optional(row.condition_ratio) << "\n";
        out << "  mu0=" << format_optional(row.mu0) << "\n";
        out << "  ln_beta: lower=" << format_double(row.ln_beta_lower)
            << "  upper_mu0=" << format_optional(row.ln_beta_upper_mu0)
            << (row.clamped_mu0 ? " (clamped)" : "")
            << "  upper_cheb=" << format_double(row.ln_beta_upper_cheb)
            << (row.clamped_cheb ? " (clamped)" : "") << "\n";
        out << "  ln_beta_value=" << format_double(row.ln_beta_value) << " (" << row.value_kind
            << ", stderr=" << format_double(row.value_stderr)
            << ")  gap_per_sample=" << format_optional(row.gap_per_sample) << "\n";
    }
    return out.str();
}

std::string render_curve_csv(const std::vector<CurveRow>& rows) {
    std::string out = "family,scale,alpha,beta,ln_beta\n";
    for (const CurveRow& row : rows) {
        out += row.family;
        out += ',';
        out += format_double(row.scale);
        out += ',';
        out += format_double(row.alpha);
        out += ',';
        out += format_double(row.beta);
        out += ',';
        out += format_double(row.ln_beta);
        out += '\n';
    }
    return out;
}

std::string render_curve_human(const std::vector<CurveRow>& rows) {
    std::ostringstream out;
    for (const CurveRow& row : rows)
        out << "[" << row.family << "] scale=" << format_double(row.scale)
            << "  alpha=" << format_double(row.alpha) << "  beta=" << format_double(row.beta)
            << "  ln_beta=" << format_double(row.ln_beta) << "\n";
    return out.str();
}

std::vector<ResultRow> parse_result_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw ParseError("csv header mismatch");
    std::vector<ResultRow> rows;
    int line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (static_cast<int>(fields.size()) != kCsvColumns)
            throw ParseError("csv line " + std::to_string(line_number) + ": expected " +
                             std::to_string(kCsvColumns) + " columns, got " +
                             std::to_string(fields.size()));
        auto num = [&](int i) { return parse_csv_double(fields[static_cast<std::size_t>(i)],
                                                        line_number, i + 1); };
        auto opt = [&](int i) -> std::optional<double> {
            if (fields[static_cast<std::size_t>(i)] == "nan") return std::nullopt;
            return num(i);
        };
        ResultRow row;
        row.family = fields[0];
        row.scale = num(1);
        row.alpha = num(2);
        row.d = num(3);
        row.r1 = num(4);
        row.mu0 = opt(5);
        row.ln_beta_lower = num(6);
        row.ln_beta_upper_mu0 = opt(7);
        row.ln_beta_upper_cheb = num(8);
        row.ln_beta_value = num(9);
        row.value_kind = fields[10];
        row.value_stderr = fields[11] == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                               : num(11);
        row.gap_per_sample = opt(12);
        row.condition_ratio = opt(13);
        row.clamped_mu0 = fields[14] == "1";
        row.clamped_cheb = fields[15] == "1";
        row.seed = static_cast<std::uint64_t>(std::strtoull(fields[16].c_str(), nullptr, 10));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace stein

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steinbounds/bounds.hpp"
#include "steinbounds/models.hpp"
#include "steinbounds/np_oracle.hpp"

namespace stein {

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr std::size_t kDefaultMcSamples = 100'000;
inline constexpr const char* kSeedEnvVar = "STEINBOUNDS_SEED";

// Scaling directive: replicate a discrete/Gaussian base n times, or rescale
// the counting model's total observation time to T.
struct SweepDirective {
    enum class Kind { Replicate, TotalTime };
    Kind kind;
    std::vector<double> values;  // strictly increasing
};

struct OutputSpec {
    std::string path;    // "-" means stdout
    std::string format;  // "csv" or "human"
};

// A parsed experiment document: base model, alpha grid, optional sweep and
// Monte Carlo settings.
struct ExperimentSpec {
    Model model;
    std::vector<Alpha> alphas;
    std::optional<SweepDirective> sweep;
    std::optional<std::size_t> mc_samples;
    std::optional<std::uint64_t> mc_seed;
    std::optional<OutputSpec> output;
    int spec_version = 1;
};

// Parses and validates a JSON experiment document. Malformed JSON raises
// ParseError (with position diagnostics); schema or model-invariant
// violations raise ValidationError/InvalidModel naming the offending field.
ExperimentSpec parse_spec(const std::string& text);

// Effective run settings after precedence resolution:
// CLI flag > spec file mc block > STEINBOUNDS_SEED env var > defaults.
struct RunOptions {
    std::uint64_t seed = kDefaultSeed;
    std::size_t mc_samples = kDefaultMcSamples;
    int threads = 1;
};
RunOptions resolve_options(const ExperimentSpec& spec,
                           std::optional<std::uint64_t> seed_flag,
                           std::optional<std::size_t> samples_flag,
                           std::optional<std::uint64_t> env_seed,
                           int threads = 1);

// One output row; mirrors the fixed CSV column order. Absent numeric
// fields render as "nan".
struct ResultRow {
    std::string family;
    double scale;
    double alpha;
    double d;
    double r1;
    std::optional<double> mu0;
    double ln_beta_lower;
    std::optional<double> ln_beta_upper_mu0;
    double ln_beta_upper_cheb;
    double ln_beta_value;
    std::string value_kind;  // "exact" or "mc"
    double value_stderr;     // 0 for exact rows, NaN for zero-count MC rows
    std::optional<double> gap_per_sample;
    std::optional<double> condition_ratio;  // absent when d = 0
    bool clamped_mu0;
    bool clamped_cheb;
    std::uint64_t seed;
};

// Report: one row per alpha for the base model. Sweep: scale-major rows
// over the sweep grid. Cells are independent and may be evaluated on
// several threads; row order and all values depend only on (spec, options).
std::vector<ResultRow> run_report(const ExperimentSpec& spec, const RunOptions& options);
std::vector<ResultRow> run_sweep(const ExperimentSpec& spec, const RunOptions& options);

// Operating-characteristic vertices for a discrete base model.
struct CurveRow {
    std::string family;
    double scale;
    double alpha;
    double beta;
    double ln_beta;
};
std::vector<CurveRow> np_curve(const ExperimentSpec& spec,
                               std::size_t cap = kDefaultAtomCap);

// Shortest round-trip decimal rendering (std::to_chars); "nan"/"inf" for
// non-finite values.
std::string format_double(double value);

std::string render_csv(const std::vector<ResultRow>& rows);
std::string render_human(const std::vector<ResultRow>& rows);
std::string render_curve_csv(const std::vector<CurveRow>& rows);
std::string render_curve_human(const std::vector<CurveRow>& rows);

// Parses a CSV document produced by render_csv (used by round-trip checks).
std::vector<ResultRow> parse_result_csv(const std::string& text);

}  // namespace stein

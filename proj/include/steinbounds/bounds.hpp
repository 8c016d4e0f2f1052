#pragma once

#include <cstdint>
#include <optional>

#include "steinbounds/divergence.hpp"
#include "steinbounds/models.hpp"

namespace stein {

// Type-I error level, strictly inside (0, 1).
class Alpha {
public:
    explicit Alpha(double value);
    double value() const { return value_; }

private:
    double value_;
};

// h(a) = -a ln a - (1-a) ln(1-a), in nats.
double binary_entropy(Alpha alpha);

// Lower bound on ln beta(alpha): -(d + h(alpha)) / (1 - alpha).
double lower_bound_ln_beta(double d, Alpha alpha);

// Smallest mu >= 0 with P{LLR <= d - mu} <= alpha, from the exact atom CDF.
// The infimum is d minus the lowest atom whose CDF exceeds alpha; it is 0
// when P{LLR <= d} <= alpha already. Requires d to match the atom mean
// within 1e-9.
double mu0_exact(const LlrAtomDistribution& atoms, double d, Alpha alpha);

// Upper bounds on ln beta(alpha), clamped at 0 since ln beta <= 0 always.
// `clamped` marks a vacuous bound.
struct ClampedBound {
    double value;
    bool clamped;
};
ClampedBound upper_bound_mu0(double d, double mu0);
ClampedBound upper_bound_chebyshev(double d, double r1, Alpha alpha);

// Monte Carlo mu0: conservative upper order statistic (1-based index
// ceil((1-alpha)*n)) of eta = d - LLR sampled under P, clamped below at 0.
// order_index and n_samples are reported so quantile noise can be assessed.
struct Mu0McResult {
    double value;
    std::size_t order_index;
    std::size_t n_samples;
    std::uint64_t seed;
    std::uint64_t stream;
    bool clamped;
};
Mu0McResult mu0_mc(const Model& model, Alpha alpha, std::size_t n_samples,
                   std::uint64_t seed, std::uint64_t stream);

// Error probabilities of the deterministic acceptance region
// A_mu = {LLR >= d - mu}: alpha_mu = P{LLR < d - mu} and
// beta_mu = Q{LLR >= d - mu}; alpha_mu + P(A_mu) = 1 exactly on atoms.
// Values within the merge tolerance of the threshold count as inside A_mu,
// so a mu derived from an atom (mu0_exact) reproduces that atom's test.
enum class EvalMode { Exact, MonteCarlo };
struct ThresholdTestResult {
    double alpha_mu;
    double beta_mu;
    double alpha_std_error;  // 0 in exact mode
    double beta_std_error;   // 0 in exact mode
    EvalMode mode;
};
ThresholdTestResult threshold_test_eval(const Model& model, double mu, EvalMode mode,
                                        std::size_t n_samples = 0,
                                        std::uint64_t seed = 0,
                                        std::uint64_t stream = 0);

// All bounds, clamps, and moments for one (model, alpha) cell.
struct BoundsReport {
    Alpha alpha;
    double d;
    double r1;
    std::optional<double> mu0;
    double ln_beta_lower;
    std::optional<double> ln_beta_upper_mu0;
    double ln_beta_upper_cheb;
    bool mu0_clamped_at_zero;   // upper_bound_mu0 hit the ln beta <= 0 clamp
    bool cheb_clamped_at_zero;  // upper_bound_chebyshev hit the clamp
    bool mu0_is_mc;
};

struct McConfig {
    std::size_t n_samples;
    std::uint64_t seed;
};

// Assembles a BoundsReport: mu0 comes from the exact atom CDF for discrete
// models and from mu0_mc (when a budget is given) otherwise.
BoundsReport bounds_report(const Model& model, Alpha alpha,
                           const std::optional<McConfig>& mc = std::nullopt,
                           std::uint64_t mu0_stream = 0,
                           std::size_t cap = kDefaultAtomCap);

}  // namespace stein

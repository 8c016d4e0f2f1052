#pragma once

#include <cstdint>

#include "steinbounds/models.hpp"

namespace stein {

// Exact LLR moments under P, all in nats. r1 is the standard deviation of
// the LLR (the dispersion term of the Chebyshev upper bound), so
// second_moment = d^2 + r1^2.
struct LlrMoments {
    double d;
    double r1;
    double second_moment;
};

struct McEstimate {
    double value;
    double std_error;
    std::size_t n_samples;
    std::uint64_t seed;
    std::uint64_t stream;
};

// D(P||Q): sum p ln(p/q) for a pair, n*D(base) for i.i.d. products,
// additive over independent components, (1/2) sum(ln l + 1/l - 1) for the
// Gaussian family, sum len*(p ln(p/q) - (p - q)) for the counting family.
// Clamped below at 0 against rounding of near-equal measures.
double kl_closed_form(const Model& model);

// Standard deviation of the LLR under P (exact, untruncated variance; it is
// additive in squares over independent coordinates).
double r1_closed_form(const Model& model);

double second_moment_closed_form(const Model& model);

LlrMoments llr_moments(const Model& model);

// r1^2 / D: the tightest constant C^2 making r1^2 <= C^2 * D hold.
// Invariant under i.i.d. replication. Throws DegenerateModel when D = 0.
double condition_ratio(const Model& model);

// Monte Carlo mean and raw second moment of the LLR under P, for
// cross-validation of the closed forms. Deterministic per (seed, stream).
struct McMoments {
    McEstimate d_hat;
    McEstimate second_moment_hat;
};
McMoments moments_mc(const Model& model, std::size_t n_samples,
                     std::uint64_t seed, std::uint64_t stream);

}  // namespace stein

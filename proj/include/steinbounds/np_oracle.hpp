#pragma once

#include <cstdint>
#include <vector>

#include "steinbounds/bounds.hpp"
#include "steinbounds/models.hpp"

namespace stein {

// Operating point of the optimal randomized likelihood-ratio test: reject
// H0 for LLR < threshold, accept for LLR > threshold, accept with
// probability gamma at LLR == threshold. gamma is chosen so the type-I
// error equals alpha exactly.
struct OperatingPoint {
    double alpha;
    double ln_beta;
    double threshold;
    double gamma;
};

// Exact minimal type-II error for a discrete model, from its LLR atoms.
// The acceptance region fills from the highest likelihood ratio downward.
OperatingPoint beta_exact(const LlrAtomDistribution& atoms, Alpha alpha);

// Vertices of the piecewise-linear, convex operating characteristic
// alpha -> beta(alpha). Linear interpolation of beta between consecutive
// vertices reproduces beta_exact. The final vertex has beta = 0
// (ln_beta = -inf); every earlier vertex has beta > 0 under equivalence.
struct CurveVertex {
    double alpha;
    double beta;
    double ln_beta;
};
std::vector<CurveVertex> beta_curve(const LlrAtomDistribution& atoms);

// Definitional oracle: enumerates all K^n outcomes of the n-fold product,
// sorts by likelihood ratio (merging equal-ratio outcomes), and applies the
// same randomized greedy fill directly on outcome space. No convolution.
// Requires K^n <= 4096.
double beta_bruteforce(const FiniteDistPair& pair, std::int64_t n, Alpha alpha);

// Empirical Neyman-Pearson test for continuous families: the threshold is
// calibrated as a conservative empirical alpha-quantile of the LLR under P
// (stream `stream_cal`), then beta is the fraction of LLR draws under Q
// (disjoint stream `stream_eval`) inside the acceptance region. If no
// Q-draw lands in the region the result is an explicit zero-count outcome
// carrying the rule-of-three upper bound ln(3 / n_eval), never a silent
// -inf.
struct BetaMcResult {
    double ln_beta;            // -inf when zero_count
    double std_error;          // NaN when zero_count
    double beta_hat;
    double threshold;
    std::size_t n_cal;
    std::size_t n_eval;
    std::uint64_t seed;
    bool zero_count;
    double ln_beta_upper_rule_of_three;
};
BetaMcResult beta_mc(const Model& model, Alpha alpha, std::size_t n_cal,
                     std::size_t n_eval, std::uint64_t seed,
                     std::uint64_t stream_cal = 0, std::uint64_t stream_eval = 1);

}  // namespace stein

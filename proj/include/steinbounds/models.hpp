#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "steinbounds/rng.hpp"

namespace stein {

// Hypothesis-pair model families. All log-likelihood ratios are in nats,
// LLR(x) = ln(dP/dQ)(x). Measures must be equivalent: strictly positive
// masses/intensities/eigenvalues are enforced at construction.

inline constexpr double kMassSumTol = 1e-12;    // Sum-to-1 check on input vectors
inline constexpr double kAtomSumTol = 1e-9;     // Sum-to-1 check on derived atoms
inline constexpr double kMergeRelTol = 1e-12;   // Relative merge tolerance on LLR values
inline constexpr std::size_t kDefaultAtomCap = 10'000'000;

// A pair of fully supported distributions on a common finite alphabet.
class FiniteDistPair {
public:
    FiniteDistPair(std::vector<double> p, std::vector<double> q);

    const std::vector<double>& p() const { return p_; }
    const std::vector<double>& q() const { return q_; }
    std::size_t alphabet_size() const { return p_.size(); }

    // Per-symbol LLR, computed as ln(p_k) - ln(q_k).
    double llr(std::size_t k) const;

private:
    std::vector<double> p_;
    std::vector<double> q_;
};

// n i.i.d. observations of a base pair.
struct IidProductModel {
    IidProductModel(FiniteDistPair base_pair, std::int64_t count);
    FiniteDistPair base;
    std::int64_t n;
};

// Independent observations with per-coordinate pairs.
struct IndependentProductModel {
    explicit IndependentProductModel(std::vector<FiniteDistPair> comps);
    std::vector<FiniteDistPair> components;
};

// Zero-mean Gaussian vectors: unit variances under P, variances lambda_i
// under Q (diagonal case; spectra are supplied directly).
struct GaussianScaleModel {
    explicit GaussianScaleModel(std::vector<double> lambdas);
    std::vector<double> eigenvalues;
};

// Counting process on [0, T] with piecewise-constant intensity: p_k under P
// and q_k under Q on a segment of length len_k. The LLR is a finite sum of
// scaled Poisson counts, so no path simulation is needed.
struct PoissonPiecewiseModel {
    struct Piece {
        double len;
        double p;
        double q;
    };
    explicit PoissonPiecewiseModel(std::vector<Piece> segs);
    std::vector<Piece> pieces;

    double total_time() const;
};

using Model = std::variant<FiniteDistPair, IidProductModel, IndependentProductModel,
                           GaussianScaleModel, PoissonPiecewiseModel>;

const char* family_name(const Model& model);
bool is_discrete(const Model& model);

// Natural scale of a model: n for products, dimension for Gaussian, total
// observation time for the counting model, 1 for a plain pair.
double model_scale(const Model& model);

// Exact distribution of the LLR under P for a discrete model: sorted,
// strictly increasing values with merged duplicates; P-masses sum to 1 and
// the implied Q-masses p*exp(-value) sum to 1 (both within kAtomSumTol).
class LlrAtomDistribution {
public:
    struct Atom {
        double value;
        double p_mass;
    };

    // Validates ordering and both normalization identities.
    explicit LlrAtomDistribution(std::vector<Atom> atoms);

    // Sorts and merges near-equal values, then validates.
    static LlrAtomDistribution from_unsorted(std::vector<Atom> atoms);

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }

    // Mean of the LLR under P (equals D(P||Q) for a valid distribution).
    double mean() const;
    double second_moment() const;

private:
    std::vector<Atom> atoms_;
};

// Q-masses aligned with the atoms: q_k = p_k * exp(-value_k).
std::vector<double> q_masses(const LlrAtomDistribution& atoms);

// Exact LLR atom distribution under P for discrete families. The i.i.d.
// product path enumerates multinomial count vectors over the distinct base
// LLR values; the independent product path convolves components pairwise.
// Throws CapExceeded if the projected atom count exceeds `cap`, and
// ExactUnavailable for continuous families.
LlrAtomDistribution llr_atoms_under_p(const Model& model,
                                      std::size_t cap = kDefaultAtomCap);
LlrAtomDistribution llr_atoms_under_p(const FiniteDistPair& pair);
LlrAtomDistribution llr_atoms_under_p(const IidProductModel& model,
                                      std::size_t cap = kDefaultAtomCap);
LlrAtomDistribution llr_atoms_under_p(const IndependentProductModel& model,
                                      std::size_t cap = kDefaultAtomCap);

enum class Hypothesis { P, Q };

// i.i.d. draws of LLR(x) with x distributed under the chosen hypothesis.
// Deterministic given the stream's (seed, stream_id).
std::vector<double> sample_llr(const Model& model, Hypothesis hyp,
                               RngStream& stream, std::size_t count);

}  // namespace stein

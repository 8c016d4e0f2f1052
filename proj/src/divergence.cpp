#include "steinbounds/divergence.hpp"

#include <algorithm>
#include <cmath>

#include "steinbounds/errors.hpp"

namespace stein {

namespace {

double pair_kl(const FiniteDistPair& pair) {
    double d = 0.0;
    for (std::size_t k = 0; k < pair.alphabet_size(); ++k) {
        d += pair.p()[k] * pair.llr(k);
    }
    return d;
}

double pair_second_moment(const FiniteDistPair& pair) {
    double m2 = 0.0;
    for (std::size_t k = 0; k < pair.alphabet_size(); ++k) {
        const double v = pair.llr(k);
        m2 += pair.p()[k] * v * v;
    }
    return m2;
}

double pair_var(const FiniteDistPair& pair) {
    const double d = pair_kl(pair);
    return std::max(0.0, pair_second_moment(pair) - d * d);
}

}  // namespace

double kl_closed_form(const Model& model) {
    const double d = std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FiniteDistPair>) {
                return pair_kl(m);
            } else if constexpr (std::is_same_v<T, IidProductModel>) {
                return static_cast<double>(m.n) * pair_kl(m.base);
            } else if constexpr (std::is_same_v<T, IndependentProductModel>) {
                double sum = 0.0;
                for (const auto& comp : m.components) sum += pair_kl(comp);
                return sum;
            } else if constexpr (std::is_same_v<T, GaussianScaleModel>) {
                double sum = 0.0;
                for (const double lambda : m.eigenvalues) {
                    sum += std::log(lambda) + 1.0 / lambda - 1.0;
                }
                return 0.5 * sum;
            } else {
                double sum = 0.0;
                for (const auto& piece : m.pieces) {
                    sum += piece.len *
                           (piece.p * (std::log(piece.p) - std::log(piece.q)) -
                            (piece.p - piece.q));
                }
                return sum;
            }
        },
        model);
    return std::max(0.0, d);
}

namespace {

// Centered second moment (variance) of the LLR under P.
double llr_variance(const Model& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FiniteDistPair>) {
                return pair_var(m);
            } else if constexpr (std::is_same_v<T, IidProductModel>) {
                return static_cast<double>(m.n) * pair_var(m.base);
            } else if constexpr (std::is_same_v<T, IndependentProductModel>) {
                double sum = 0.0;
                for (const auto& comp : m.components) sum += pair_var(comp);
                return sum;
            } else if constexpr (std::is_same_v<T, GaussianScaleModel>) {
                double sum = 0.0;
                for (const double lambda : m.eigenvalues) {
                    const double t = 1.0 / lambda - 1.0;
                    sum += t * t;
                }
                return 0.5 * sum;
            } else {
                double sum = 0.0;
                for (const auto& piece : m.pieces) {
                    const double v = std::log(piece.p) - std::log(piece.q);
                    sum += piece.len * piece.p * v * v;
                }
                return sum;
            }
        },
        model);
}

}  // namespace

double r1_closed_form(const Model& model) {
    const double var = llr_variance(model);
    if (!std::isfinite(var)) {
        throw ComputationError("LLR variance overflowed for this model");
    }
    return std::sqrt(var);
}

double second_moment_closed_form(const Model& model) {
    const double d = kl_closed_form(model);
    return d * d + llr_variance(model);
}

LlrMoments llr_moments(const Model& model) {
    const double d = kl_closed_form(model);
    const double var = llr_variance(model);
    return {d, std::sqrt(var), d * d + var};
}

double condition_ratio(const Model& model) {
    const double d = kl_closed_form(model);
    if (d == 0.0) {
        throw DegenerateModel("condition ratio undefined: D(P||Q) = 0");
    }
    const double r1 = r1_closed_form(model);
    return r1 * r1 / d;
}

McMoments moments_mc(const Model& model, std::size_t n_samples,
                     std::uint64_t seed, std::uint64_t stream) {
    if (n_samples < 100) {
        throw TooFewSamples("moments_mc needs at least 100 samples");
    }
    RngStream rng(seed, stream);
    const std::vector<double> llr = sample_llr(model, Hypothesis::P, rng, n_samples);

    const double n = static_cast<double>(n_samples);
    double mean = 0.0;
    double mean_sq = 0.0;
    for (const double v : llr) {
        mean += v;
        mean_sq += v * v;
    }
    mean /= n;
    mean_sq /= n;

    // Sample variances of the LLR and of its square, for standard errors.
    double var = 0.0;
    double var_sq = 0.0;
    for (const double v : llr) {
        const double dv = v - mean;
        const double dv2 = v * v - mean_sq;
        var += dv * dv;
        var_sq += dv2 * dv2;
    }
    var /= (n - 1.0);
    var_sq /= (n - 1.0);

    McMoments out;
    out.d_hat = {mean, std::sqrt(var / n), n_samples, seed, stream};
    out.second_moment_hat = {mean_sq, std::sqrt(var_sq / n), n_samples, seed, stream};
    return out;
}

}  // namespace stein

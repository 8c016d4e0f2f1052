#include "steinbounds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "steinbounds/errors.hpp"

namespace stein {

Alpha::Alpha(double value) : value_(value) {
    if (!(value > 0.0) || !(value < 1.0)) {
        throw DomainError("alpha must lie strictly inside (0, 1), got " +
                          std::to_string(value));
    }
}

double binary_entropy(Alpha alpha) {
    const double a = alpha.value();
    return -a * std::log(a) - (1.0 - a) * std::log(1.0 - a);
}

double lower_bound_ln_beta(double d, Alpha alpha) {
    if (d < 0.0) {
        throw DomainError("divergence must be non-negative");
    }
    return -(d + binary_entropy(alpha)) / (1.0 - alpha.value());
}

double mu0_exact(const LlrAtomDistribution& atoms, double d, Alpha alpha) {
    if (std::abs(atoms.mean() - d) > 1e-9) {
        throw InvalidInput("d does not match the atom mean within 1e-9");
    }
    // Lowest atom value whose CDF exceeds alpha; exists since the CDF
    // reaches ~1 and alpha < 1.
    double cdf = 0.0;
    for (const auto& atom : atoms.atoms()) {
        cdf += atom.p_mass;
        if (cdf > alpha.value()) {
            return std::max(0.0, d - atom.value);
        }
    }
    return 0.0;  // unreachable for valid atoms (masses sum to 1 > alpha)
}

ClampedBound upper_bound_mu0(double d, double mu0) {
    const double raw = -d + mu0;
    return {std::min(0.0, raw), raw >= 0.0};
}

ClampedBound upper_bound_chebyshev(double d, double r1, Alpha alpha) {
    const double raw = -d + r1 / std::sqrt(alpha.value());
    return {std::min(0.0, raw), raw >= 0.0};
}

Mu0McResult mu0_mc(const Model& model, Alpha alpha, std::size_t n_samples,
                   std::uint64_t seed, std::uint64_t stream) {
    const double need = std::ceil(10.0 / alpha.value());
    if (static_cast<double>(n_samples) < need) {
        throw TooFewSamples("mu0_mc needs at least ceil(10/alpha) = " +
                            std::to_string(static_cast<std::size_t>(need)) +
                            " samples");
    }
    const double d = kl_closed_form(model);
    RngStream rng(seed, stream);
    std::vector<double> eta = sample_llr(model, Hypothesis::P, rng, n_samples);
    for (double& v : eta) v = d - v;
    std::sort(eta.begin(), eta.end());

    const auto idx = static_cast<std::size_t>(
        std::ceil((1.0 - alpha.value()) * static_cast<double>(n_samples)));
    const std::size_t clamped_idx = std::min(std::max<std::size_t>(idx, 1), n_samples);
    const double raw = eta[clamped_idx - 1];

    Mu0McResult out;
    out.value = std::max(0.0, raw);
    out.order_index = clamped_idx;
    out.n_samples = n_samples;
    out.seed = seed;
    out.stream = stream;
    out.clamped = raw < 0.0;
    return out;
}

ThresholdTestResult threshold_test_eval(const Model& model, double mu, EvalMode mode,
                                        std::size_t n_samples, std::uint64_t seed,
                                        std::uint64_t stream) {
    const double d = kl_closed_form(model);
    const double threshold = d - mu;
    // Recomputing d - mu can land one ulp past the atom the threshold was
    // derived from; values within the merge tolerance of the threshold
    // belong to the acceptance region.
    const double edge = threshold - kMergeRelTol * std::max(1.0, std::abs(threshold));

    if (mode == EvalMode::Exact) {
        const LlrAtomDistribution atoms = llr_atoms_under_p(
            Model(model));  // throws ExactUnavailable for continuous families
        double alpha_mu = 0.0;
        double beta_mu = 0.0;
        // Sum the Q tail from the largest value down: the addends grow, which
        // keeps the accumulation accurate for deep tails.
        const auto& a = atoms.atoms();
        for (std::size_t k = a.size(); k-- > 0;) {
            if (a[k].value >= edge) {
                beta_mu += a[k].p_mass * std::exp(-a[k].value);
            }
        }
        for (const auto& atom : a) {
            if (atom.value < edge) alpha_mu += atom.p_mass;
        }
        return {alpha_mu, beta_mu, 0.0, 0.0, EvalMode::Exact};
    }

    if (n_samples < 2) {
        throw TooFewSamples("threshold_test_eval MC mode needs n_samples >= 2");
    }
    RngStream rng_p(seed, stream);
    RngStream rng_q(seed, stream + 1);
    const auto llr_p = sample_llr(model, Hypothesis::P, rng_p, n_samples);
    const auto llr_q = sample_llr(model, Hypothesis::Q, rng_q, n_samples);
    double hits_p = 0.0;
    double hits_q = 0.0;
    for (const double v : llr_p) hits_p += v < edge ? 1.0 : 0.0;
    for (const double v : llr_q) hits_q += v >= edge ? 1.0 : 0.0;
    const double n = static_cast<double>(n_samples);
    const double a_hat = hits_p / n;
    const double b_hat = hits_q / n;
    return {a_hat, b_hat, std::sqrt(a_hat * (1.0 - a_hat) / n),
            std::sqrt(b_hat * (1.0 - b_hat) / n), EvalMode::MonteCarlo};
}

BoundsReport bounds_report(const Model& model, Alpha alpha,
                           const std::optional<McConfig>& mc,
                           std::uint64_t mu0_stream, std::size_t cap) {
    const LlrMoments moments = llr_moments(model);

    std::optional<double> mu0;
    bool mu0_is_mc = false;
    if (is_discrete(model)) {
        mu0 = mu0_exact(llr_atoms_under_p(model, cap), moments.d, alpha);
    } else if (mc.has_value()) {
        mu0 = mu0_mc(model, alpha, mc->n_samples, mc->seed, mu0_stream).value;
        mu0_is_mc = true;
    }

    const ClampedBound cheb = upper_bound_chebyshev(moments.d, moments.r1, alpha);

    BoundsReport report{alpha,
                        moments.d,
                        moments.r1,
                        mu0,
                        lower_bound_ln_beta(moments.d, alpha),
                        std::nullopt,
                        cheb.value,
                        false,
                        cheb.clamped,
                        mu0_is_mc};
    if (mu0.has_value()) {
        const ClampedBound ub = upper_bound_mu0(moments.d, *mu0);
        report.ln_beta_upper_mu0 = ub.value;
        report.mu0_clamped_at_zero = ub.clamped;
    }
    return report;
}

}  // namespace stein

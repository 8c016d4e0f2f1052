#include "steinbounds/np_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "steinbounds/errors.hpp"

namespace stein {

namespace {

struct RatioAtom {
    double llr;
    double p_mass;
    double q_mass;
};

// Randomized greedy fill shared by the exact and brute-force routes:
// rejecting from the lowest likelihood ratio upward maximizes the P-mass
// kept per unit of Q-mass. Atoms must be sorted ascending by llr with
// distinct values.
OperatingPoint greedy_fill(const std::vector<RatioAtom>& atoms, Alpha alpha) {
    const double a = alpha.value();
    // Boundary atom: the first whose cumulative P-mass strictly exceeds alpha.
    std::size_t boundary = atoms.size() - 1;
    double cum_below = 0.0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (cum_below + atoms[k].p_mass > a) {
            boundary = k;
            break;
        }
        cum_below += atoms[k].p_mass;
    }
    const double gamma =
        std::clamp(1.0 - (a - cum_below) / atoms[boundary].p_mass, 0.0, 1.0);

    // Tail Q-mass summed from the top down (smallest addends first).
    double beta = 0.0;
    for (std::size_t k = atoms.size(); k-- > boundary + 1;) {
        beta += atoms[k].q_mass;
    }
    beta += gamma * atoms[boundary].q_mass;
    return {a, std::log(beta), atoms[boundary].llr, gamma};
}

std::vector<RatioAtom> to_ratio_atoms(const LlrAtomDistribution& atoms) {
    std::vector<RatioAtom> out;
    out.reserve(atoms.size());
    for (const auto& atom : atoms.atoms()) {
        out.push_back({atom.value, atom.p_mass, atom.p_mass * std::exp(-atom.value)});
    }
    return out;
}

}  // namespace

OperatingPoint beta_exact(const LlrAtomDistribution& atoms, Alpha alpha) {
    return greedy_fill(to_ratio_atoms(atoms), alpha);
}

std::vector<CurveVertex> beta_curve(const LlrAtomDistribution& atoms) {
    const auto ratio = to_ratio_atoms(atoms);
    std::vector<CurveVertex> vertices;
    vertices.reserve(ratio.size() + 1);
    vertices.push_back({0.0, 1.0, 0.0});

    // Vertex k: reject the k lowest-ratio atoms fully.
    std::vector<double> q_tail(ratio.size() + 1, 0.0);
    for (std::size_t k = ratio.size(); k-- > 0;) {
        q_tail[k] = q_tail[k + 1] + ratio[k].q_mass;
    }
    double cum_alpha = 0.0;
    for (std::size_t k = 0; k < ratio.size(); ++k) {
        cum_alpha += ratio[k].p_mass;
        const double beta = q_tail[k + 1];
        vertices.push_back(
            {cum_alpha, beta,
             beta > 0.0 ? std::log(beta) : -std::numeric_limits<double>::infinity()});
    }
    return vertices;
}

double beta_bruteforce(const FiniteDistPair& pair, std::int64_t n, Alpha alpha) {
    if (n < 1) {
        throw InvalidInput("n must be >= 1");
    }
    const std::size_t k_symbols = pair.alphabet_size();
    double projected = 1.0;
    for (std::int64_t i = 0; i < n; ++i) projected *= static_cast<double>(k_symbols);
    if (projected > 4096.0) {
        throw CapExceeded("brute force needs K^n <= 4096, got " +
                          std::to_string(projected));
    }
    const auto total = static_cast<std::size_t>(projected);

    // Odometer walk over all outcome tuples.
    std::vector<RatioAtom> outcomes;
    outcomes.reserve(total);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    for (std::size_t count = 0; count < total; ++count) {
        double p_prob = 1.0;
        double q_prob = 1.0;
        double llr = 0.0;
        for (const std::size_t symbol : idx) {
            p_prob *= pair.p()[symbol];
            q_prob *= pair.q()[symbol];
            llr += pair.llr(symbol);
        }
        outcomes.push_back({llr, p_prob, q_prob});
        for (std::size_t pos = 0; pos < idx.size(); ++pos) {
            if (++idx[pos] < k_symbols) break;
            idx[pos] = 0;
        }
    }

    std::stable_sort(outcomes.begin(), outcomes.end(),
                     [](const RatioAtom& a, const RatioAtom& b) { return a.llr < b.llr; });
    std::vector<RatioAtom> merged;
    merged.reserve(outcomes.size());
    for (const auto& o : outcomes) {
        if (!merged.empty() &&
            std::abs(merged.back().llr - o.llr) <=
                kMergeRelTol * std::max(1.0, std::abs(merged.back().llr))) {
            merged.back().p_mass += o.p_mass;
            merged.back().q_mass += o.q_mass;
        } else {
            merged.push_back(o);
        }
    }
    return greedy_fill(merged, alpha).ln_beta;
}

BetaMcResult beta_mc(const Model& model, Alpha alpha, std::size_t n_cal,
                     std::size_t n_eval, std::uint64_t seed,
                     std::uint64_t stream_cal, std::uint64_t stream_eval) {
    const double need_cal = std::ceil(100.0 / alpha.value());
    if (static_cast<double>(n_cal) < need_cal) {
        throw TooFewSamples("beta_mc needs n_cal >= ceil(100/alpha) = " +
                            std::to_string(static_cast<std::size_t>(need_cal)));
    }
    if (n_eval < 1000) {
        throw TooFewSamples("beta_mc needs n_eval >= 1000");
    }

    // Conservative alpha-quantile of the LLR under P: the floor(alpha*n)-th
    // order statistic, so the empirical P-mass strictly below the threshold
    // stays under alpha.
    RngStream rng_cal(seed, stream_cal);
    std::vector<double> llr_p = sample_llr(model, Hypothesis::P, rng_cal, n_cal);
    std::sort(llr_p.begin(), llr_p.end());
    auto idx = static_cast<std::size_t>(
        std::floor(alpha.value() * static_cast<double>(n_cal)));
    idx = std::min(std::max<std::size_t>(idx, 1), n_cal);
    const double threshold = llr_p[idx - 1];

    RngStream rng_eval(seed, stream_eval);
    const std::vector<double> llr_q =
        sample_llr(model, Hypothesis::Q, rng_eval, n_eval);
    std::size_t hits = 0;
    for (const double v : llr_q) {
        if (v >= threshold) ++hits;
    }

    BetaMcResult out;
    out.threshold = threshold;
    out.n_cal = n_cal;
    out.n_eval = n_eval;
    out.seed = seed;
    out.ln_beta_upper_rule_of_three = std::log(3.0 / static_cast<double>(n_eval));
    if (hits == 0) {
        out.zero_count = true;
        out.beta_hat = 0.0;
        out.ln_beta = -std::numeric_limits<double>::infinity();
        out.std_error = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double n = static_cast<double>(n_eval);
    const double beta_hat = static_cast<double>(hits) / n;
    out.zero_count = false;
    out.beta_hat = beta_hat;
    out.ln_beta = std::log(beta_hat);
    // Binomial standard error propagated through the log.
    out.std_error = std::sqrt(beta_hat * (1.0 - beta_hat) / n) / beta_hat;
    return out;
}

}  // namespace stein

#include "steinbounds/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "steinbounds/bounds.hpp"
#include "steinbounds/divergence.hpp"
#include "steinbounds/errors.hpp"
#include "steinbounds/experiment.hpp"
#include "steinbounds/models.hpp"
#include "steinbounds/np_oracle.hpp"
#include "steinbounds/rng.hpp"

namespace stein {
namespace {

constexpr std::size_t kMcBudget = 20'000;

struct Suite {
    SuiteResult result;

    explicit Suite(std::string name) { result.name = std::move(name); }

    void check(bool ok, const std::string& what) {
        ++result.checks;
        if (!ok) {
            ++result.failures;
            result.messages.push_back(what);
        }
    }

    void close(double got, double want, double tol, const std::string& what) {
        const bool ok = std::isfinite(got) && std::abs(got - want) <= tol;
        check(ok, what + ": got " + format_double(got) + ", want " + format_double(want) +
                      " within " + format_double(tol));
    }
};

// Random fully supported pair; the last mass absorbs the rounding residual
// so the sum is exactly 1.
FiniteDistPair random_pair(RngStream& rng, std::size_t alphabet) {
    std::vector<double> p(alphabet);
    std::vector<double> q(alphabet);
    for (auto* masses : {&p, &q}) {
        double total = 0;
        for (std::size_t k = 0; k + 1 < alphabet; ++k) {
            (*masses)[k] = (0.05 + rng.uniform()) / (1.5 * static_cast<double>(alphabet));
            total += (*masses)[k];
        }
        (*masses)[alphabet - 1] = 1.0 - total;
    }
    return FiniteDistPair(std::move(p), std::move(q));
}

void models_suite(Suite& s, std::uint64_t seed) {
    RngStream rng(seed, 1000);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t alphabet = 2 + static_cast<std::size_t>(rng.uniform() * 4.99);
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform() * 4.99);
        const FiniteDistPair base = random_pair(rng, alphabet);
        const IidProductModel iid(base, n);

        const LlrAtomDistribution via_multinomial = llr_atoms_under_p(iid);
        const IndependentProductModel tiled(
            std::vector<FiniteDistPair>(static_cast<std::size_t>(n), base));
        const LlrAtomDistribution via_convolution = llr_atoms_under_p(tiled);

        s.check(via_multinomial.size() == via_convolution.size(),
                "multinomial and convolution atom counts differ for n=" + std::to_string(n));
        if (via_multinomial.size() == via_convolution.size()) {
            double worst = 0;
            for (std::size_t k = 0; k < via_multinomial.size(); ++k) {
                const auto& a = via_multinomial.atoms()[k];
                const auto& b = via_convolution.atoms()[k];
                worst = std::max(worst, std::abs(a.value - b.value));
                worst = std::max(worst, std::abs(a.p_mass - b.p_mass));
            }
            s.close(worst, 0.0, 1e-10, "multinomial vs convolution atom mismatch");
        }

        double p_sum = 0;
        double q_sum = 0;
        for (const auto& atom : via_multinomial.atoms()) {
            p_sum += atom.p_mass;
            q_sum += atom.p_mass * std::exp(-atom.value);
        }
        s.close(p_sum, 1.0, 1e-9, "atom P-masses do not sum to 1");
        s.close(q_sum, 1.0, 1e-9, "implied Q-masses do not sum to 1");
        s.close(via_multinomial.mean(), kl_closed_form(Model(iid)), 1e-9,
                "atom mean disagrees with closed-form divergence");
    }

    {
        RngStream shuffle_rng(seed, 1001);
        std::vector<FiniteDistPair> components;
        for (int i = 0; i < 4; ++i) components.push_back(random_pair(shuffle_rng, 3));
        const LlrAtomDistribution forward =
            llr_atoms_under_p(IndependentProductModel(components));
        std::reverse(components.begin(), components.end());
        const LlrAtomDistribution reversed =
            llr_atoms_under_p(IndependentProductModel(components));
        s.check(forward.size() == reversed.size(),
                "component order changed the atom count");
        if (forward.size() == reversed.size()) {
            double worst = 0;
            for (std::size_t k = 0; k < forward.size(); ++k) {
                worst = std::max(worst, std::abs(forward.atoms()[k].value -
                                                 reversed.atoms()[k].value));
                worst = std::max(worst, std::abs(forward.atoms()[k].p_mass -
                                                 reversed.atoms()[k].p_mass));
            }
            s.close(worst, 0.0, 1e-10, "component order changed the atoms");
        }
    }

    {
        // Corrupt a valid atom table and make sure the validator rejects it.
        RngStream fault_rng(seed, 1002);
        const FiniteDistPair pair = random_pair(fault_rng, 4);
        std::vector<LlrAtomDistribution::Atom> atoms;
        for (std::size_t k = 0; k < pair.alphabet_size(); ++k)
            atoms.push_back({pair.llr(k), pair.p()[k]});
        atoms[0].p_mass += 1e-6;
        bool threw = false;
        try {
            (void)LlrAtomDistribution::from_unsorted(atoms);
        } catch (const ValidationError&) {
            threw = true;
        }
        s.check(threw, "atom validator accepted a corrupted mass table");
    }

    {
        const GaussianScaleModel gauss({2.0, 0.5, 1.25});
        RngStream a(seed, 1003);
        RngStream b(seed, 1003);
        RngStream c(seed, 1004);
        const auto draws_a = sample_llr(Model(gauss), Hypothesis::P, a, 256);
        const auto draws_b = sample_llr(Model(gauss), Hypothesis::P, b, 256);
        const auto draws_c = sample_llr(Model(gauss), Hypothesis::P, c, 256);
        s.check(draws_a == draws_b, "identical streams produced different samples");
        s.check(draws_a != draws_c, "distinct stream ids produced identical samples");
    }
}

void divergence_suite(Suite& s, std::uint64_t seed) {
    RngStream rng(seed, 2000);
    for (int trial = 0; trial < 20; ++trial) {
        const FiniteDistPair a = random_pair(rng, 3);
        const FiniteDistPair b = random_pair(rng, 4);
        const IndependentProductModel both({a, b});
        s.close(kl_closed_form(Model(both)),
                kl_closed_form(Model(a)) + kl_closed_form(Model(b)), 1e-12,
                "divergence is not additive over independent components");
        const double var_a = std::pow(r1_closed_form(Model(a)), 2);
        const double var_b = std::pow(r1_closed_form(Model(b)), 2);
        s.close(std::pow(r1_closed_form(Model(both)), 2), var_a + var_b, 1e-12,
                "LLR variance is not additive over independent components");

        const LlrAtomDistribution atoms = llr_atoms_under_p(Model(both));
        s.close(atoms.mean(), kl_closed_form(Model(both)), 1e-9,
                "exact atom mean disagrees with divergence closed form");
        s.close(atoms.second_moment(), second_moment_closed_form(Model(both)),
                1e-9 * std::max(1.0, atoms.second_moment()),
                "exact atom second moment disagrees with closed form");

        const IidProductModel iid(a, 7);
        s.close(condition_ratio(Model(iid)), condition_ratio(Model(a)),
                1e-9 * condition_ratio(Model(a)),
                "condition ratio is not invariant under replication");
    }

    const std::vector<Model> mc_models = {
        Model(FiniteDistPair({0.5, 0.5}, {0.25, 0.75})),
        Model(GaussianScaleModel({2.0, 0.5})),
        Model(PoissonPiecewiseModel({{1.0, 2.0, 1.0}, {0.5, 1.0, 3.0}})),
    };
    std::uint64_t stream = 2100;
    for (const Model& model : mc_models) {
        const LlrMoments exact = llr_moments(model);
        const McMoments mc = moments_mc(model, kMcBudget, seed, stream++);
        s.check(std::abs(mc.d_hat.value - exact.d) <= 5 * mc.d_hat.std_error,
                std::string("MC divergence off by more than 5 standard errors for ") +
                    family_name(model));
        s.check(std::abs(mc.second_moment_hat.value - exact.second_moment) <=
                    5 * mc.second_moment_hat.std_error,
                std::string("MC second moment off by more than 5 standard errors for ") +
                    family_name(model));
    }
}

void bounds_suite(Suite& s, std::uint64_t seed) {
    RngStream rng(seed, 3000);
    const double alphas[] = {0.01, 0.05, 0.1, 0.25, 0.5, 0.9};
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t alphabet = 2 + static_cast<std::size_t>(rng.uniform() * 3.99);
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform() * 5.99);
        const Model model = IidProductModel(random_pair(rng, alphabet), n);
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        const LlrMoments moments = llr_moments(model);

        double prev_mu0 = std::numeric_limits<double>::infinity();
        double prev_cheb = std::numeric_limits<double>::infinity();
        for (const double a : alphas) {
            const Alpha alpha(a);
            const double ln_beta = beta_exact(atoms, alpha).ln_beta;
            const double lower = lower_bound_ln_beta(moments.d, alpha);
            const double mu0 = mu0_exact(atoms, moments.d, alpha);
            const ClampedBound upper = upper_bound_mu0(moments.d, mu0);
            const ClampedBound cheb = upper_bound_chebyshev(moments.d, moments.r1, alpha);

            s.check(lower <= ln_beta + 1e-9,
                    "lower bound exceeds the exact error exponent at alpha=" + format_double(a));
            s.check(ln_beta <= upper.value + 1e-9,
                    "exact error exceeds the threshold-test bound at alpha=" + format_double(a));
            s.check(ln_beta <= cheb.value + 1e-9,
                    "exact error exceeds the dispersion bound at alpha=" + format_double(a));
            s.check(mu0 <= moments.r1 / std::sqrt(a) + 1e-9,
                    "mu0 exceeds its dispersion cap at alpha=" + format_double(a));
            s.check(mu0 <= prev_mu0 + 1e-12, "mu0 is not non-increasing in alpha");
            s.check(cheb.value <= prev_cheb + 1e-12,
                    "dispersion bound is not non-increasing in alpha");
            prev_mu0 = mu0;
            prev_cheb = cheb.value;

            const ThresholdTestResult at_mu0 = threshold_test_eval(model, mu0, EvalMode::Exact);
            s.check(at_mu0.alpha_mu <= a + 1e-12,
                    "threshold test at mu0 overshoots alpha=" + format_double(a));
            for (const double mu : {0.0, moments.r1, 2 * moments.r1}) {
                const ThresholdTestResult res = threshold_test_eval(model, mu, EvalMode::Exact);
                s.check(res.beta_mu <= std::exp(-moments.d + mu) + 1e-12,
                        "threshold test type-II error exceeds exp(-d + mu)");
            }
        }
    }
}

void np_oracle_suite(Suite& s, std::uint64_t seed) {
    RngStream rng(seed, 4000);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t alphabet = 2 + static_cast<std::size_t>(rng.uniform() * 2.99);
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform() * 2.99);
        const FiniteDistPair base = random_pair(rng, alphabet);
        const Alpha alpha(0.02 + 0.9 * rng.uniform());
        const double direct = std::exp(beta_bruteforce(base, n, alpha));
        const double via_atoms =
            std::exp(beta_exact(llr_atoms_under_p(IidProductModel(base, n)), alpha).ln_beta);
        s.close(via_atoms, direct, 1e-10, "atom-based test disagrees with outcome enumeration");
    }

    {
        const FiniteDistPair neutral({0.3, 0.7}, {0.3, 0.7});
        const LlrAtomDistribution atoms = llr_atoms_under_p(neutral);
        for (const double a : {0.1, 0.33, 0.5, 0.77})
            s.close(std::exp(beta_exact(atoms, Alpha(a)).ln_beta), 1.0 - a, 1e-12,
                    "identical hypotheses should give beta = 1 - alpha");
    }

    {
        RngStream curve_rng(seed, 4001);
        const Model model = IidProductModel(random_pair(curve_rng, 3), 4);
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        const std::vector<CurveVertex> curve = beta_curve(atoms);
        s.check(curve.size() >= 2, "operating characteristic has fewer than 2 vertices");
        s.check(curve.front().alpha == 0.0 && curve.front().beta == 1.0,
                "operating characteristic does not start at (0, 1)");
        s.check(curve.back().beta == 0.0, "operating characteristic does not end at beta = 0");
        for (std::size_t k = 0; k + 2 < curve.size(); ++k) {
            const auto& v0 = curve[k];
            const auto& v1 = curve[k + 1];
            const auto& v2 = curve[k + 2];
            const double slope01 = (v1.beta - v0.beta) / (v1.alpha - v0.alpha);
            const double slope12 = (v2.beta - v1.beta) / (v2.alpha - v1.alpha);
            s.check(slope12 >= slope01 - 1e-9, "operating characteristic is not convex");
        }
        for (int probe = 0; probe < 10; ++probe) {
            const double a = 0.01 + 0.98 * curve_rng.uniform();
            std::size_t hi = 1;
            while (hi + 1 < curve.size() && curve[hi].alpha < a) ++hi;
            const auto& lo_v = curve[hi - 1];
            const auto& hi_v = curve[hi];
            const double t = (a - lo_v.alpha) / (hi_v.alpha - lo_v.alpha);
            const double interpolated = lo_v.beta + t * (hi_v.beta - lo_v.beta);
            s.close(std::exp(beta_exact(atoms, Alpha(a)).ln_beta), interpolated, 1e-10,
                    "interpolated vertices disagree with the exact test at alpha=" +
                        format_double(a));
        }
    }
}

void determinism_suite(Suite& s, std::uint64_t seed) {
    const Model gauss = GaussianScaleModel({2.0, 0.5, 1.5});
    const McMoments first = moments_mc(gauss, kMcBudget, seed, 5000);
    const McMoments second = moments_mc(gauss, kMcBudget, seed, 5000);
    s.check(first.d_hat.value == second.d_hat.value &&
                first.second_moment_hat.value == second.second_moment_hat.value,
            "repeated MC moment estimates are not bitwise identical");

    const Alpha alpha(0.1);
    const BetaMcResult beta_a = beta_mc(gauss, alpha, kMcBudget, kMcBudget, seed, 5001, 5002);
    const BetaMcResult beta_b = beta_mc(gauss, alpha, kMcBudget, kMcBudget, seed, 5001, 5002);
    s.check(beta_a.ln_beta == beta_b.ln_beta && beta_a.threshold == beta_b.threshold,
            "repeated MC beta estimates are not bitwise identical");

    const Mu0McResult mu0_a = mu0_mc(gauss, alpha, kMcBudget, seed, 5003);
    const Mu0McResult mu0_b = mu0_mc(gauss, alpha, kMcBudget, seed, 5003);
    s.check(mu0_a.value == mu0_b.value && mu0_a.order_index == mu0_b.order_index,
            "repeated MC mu0 estimates are not bitwise identical");

    // Changing the seed must leave exact results untouched and move MC
    // estimates only within their tolerance bands.
    const Model discrete = IidProductModel(FiniteDistPair({0.5, 0.5}, {0.25, 0.75}), 6);
    const LlrAtomDistribution atoms = llr_atoms_under_p(discrete);
    const double exact_ln_beta = beta_exact(atoms, alpha).ln_beta;
    s.check(beta_exact(atoms, alpha).ln_beta == exact_ln_beta,
            "exact test result changed between evaluations");

    const double exact_d = kl_closed_form(gauss);
    for (const std::uint64_t other_seed : {seed + 1, seed + 17}) {
        const McMoments moments = moments_mc(gauss, kMcBudget, other_seed, 5000);
        s.check(std::abs(moments.d_hat.value - exact_d) <= 5 * moments.d_hat.std_error,
                "MC divergence off by more than 5 standard errors under seed " +
                    std::to_string(other_seed));
        s.check(moments.d_hat.value != first.d_hat.value,
                "changing the seed did not change the MC estimate");
    }
}

}  // namespace

std::vector<SuiteResult> run_selftest(std::uint64_t seed) {
    std::vector<SuiteResult> results;
    {
        Suite s("models");
        models_suite(s, seed);
        results.push_back(std::move(s.result));
    }
    {
        Suite s("divergence");
        divergence_suite(s, seed);
        results.push_back(std::move(s.result));
    }
    {
        Suite s("bounds");
        bounds_suite(s, seed);
        results.push_back(std::move(s.result));
    }
    {
        Suite s("np_oracle");
        np_oracle_suite(s, seed);
        results.push_back(std::move(s.result));
    }
    {
        Suite s("determinism");
        determinism_suite(s, seed);
        results.push_back(std::move(s.result));
    }
    return results;
}

bool selftest_passed(const std::vector<SuiteResult>& results) {
    for (const SuiteResult& suite : results)
        if (suite.failures > 0) return false;
    return true;
}

std::string render_selftest(const std::vector<SuiteResult>& results) {
    std::ostringstream out;
    int checks = 0;
    int failures = 0;
    for (const SuiteResult& suite : results) {
        out << "suite " << suite.name << ": " << suite.checks << " checks, " << suite.failures
            << " failures\n";
        for (const std::string& message : suite.messages) out << "  FAIL: " << message << "\n";
        checks += suite.checks;
        failures += suite.failures;
    }
    out << (failures == 0 ? "selftest: PASS" : "selftest: FAIL") << " (" << checks
        << " checks, " << failures << " failures)\n";
    return out.str();
}

}  // namespace stein

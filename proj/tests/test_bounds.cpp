#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "steinbounds/bounds.hpp"
#include "steinbounds/divergence.hpp"
#include "steinbounds/errors.hpp"
#include "steinbounds/np_oracle.hpp"

#include "oracles.hpp"

using namespace stein;
using namespace testoracle;

TEST_CASE("alpha must lie strictly inside the unit interval") {
    CHECK_THROWS_AS(Alpha(0.0), DomainError);
    CHECK_THROWS_AS(Alpha(1.0), DomainError);
    CHECK_THROWS_AS(Alpha(-0.2), DomainError);
    CHECK_THROWS_AS(Alpha(1.7), DomainError);
    CHECK_THROWS_AS(Alpha(std::nan("")), DomainError);
    CHECK_NOTHROW(Alpha(1e-9));
    CHECK_NOTHROW(Alpha(0.999999999));
}

TEST_CASE("binary entropy values and symmetry") {
    CHECK(binary_entropy(Alpha(0.5)) == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(binary_entropy(Alpha(0.1)) == doctest::Approx(kEntropy01).epsilon(1e-14));
    CHECK(binary_entropy(Alpha(0.3)) ==
          doctest::Approx(binary_entropy(Alpha(0.7))).epsilon(1e-15));
}

TEST_CASE("lower bound plug-in values") {
    CHECK(lower_bound_ln_beta(0.0, Alpha(0.5)) ==
          doctest::Approx(kLowerZeroAlpha05).epsilon(1e-14));
    CHECK(lower_bound_ln_beta(kBernD, Alpha(0.1)) ==
          doctest::Approx(kLowerBernAlpha01).epsilon(1e-14));
    CHECK(lower_bound_ln_beta(kGauss100D, Alpha(0.25)) ==
          doctest::Approx(kGauss100LowerAlpha025).epsilon(1e-13));
    CHECK_THROWS_AS(lower_bound_ln_beta(-0.1, Alpha(0.5)), DomainError);
    // Consistency with beta(alpha) = 1 - alpha for identical hypotheses.
    CHECK(lower_bound_ln_beta(0.0, Alpha(0.5)) <= std::log(0.5));
}

TEST_CASE("exact mu0 from the atom CDF") {
    const LlrAtomDistribution atoms = llr_atoms_under_p(bernoulli_pair());
    CHECK(mu0_exact(atoms, kBernD, Alpha(0.4)) ==
          doctest::Approx(kBernMu0Alpha04).epsilon(1e-12));
    CHECK(mu0_exact(atoms, kBernD, Alpha(0.6)) == 0.0);
    CHECK(mu0_exact(atoms, kBernD, Alpha(0.5)) == 0.0);

    const LlrAtomDistribution neutral({{0.0, 1.0}});
    CHECK(mu0_exact(neutral, 0.0, Alpha(0.1)) == 0.0);
    CHECK(mu0_exact(neutral, 0.0, Alpha(0.9)) == 0.0);

    CHECK_THROWS_AS(mu0_exact(atoms, kBernD + 1.0, Alpha(0.4)), InvalidInput);
}

TEST_CASE("mu0 is the infimum of the feasible offsets") {
    std::mt19937_64 rng(1337u);
    for (int trial = 0; trial < 30; ++trial) {
        const Model model = Model(IidProductModel(random_pair(rng, 2 + rng() % 4),
                                                  1 + static_cast<std::int64_t>(rng() % 5)));
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        const double d = atoms.mean();
        const Alpha alpha(0.02 + 0.9 * (static_cast<double>(rng() % 1000) / 1000.0));
        const double mu0 = mu0_exact(atoms, d, alpha);

        auto cdf_at = [&](double x) {
            double mass = 0.0;
            for (const auto& atom : atoms.atoms())
                if (atom.value <= x) mass += atom.p_mass;
            return mass;
        };
        // Feasible: P{LLR <= d - mu} <= alpha for every mu strictly above mu0.
        CHECK(cdf_at(d - (mu0 + 1e-9)) <= alpha.value());
        // Minimal: stepping below mu0 breaks feasibility (when mu0 > 0).
        if (mu0 > 1e-9) CHECK(cdf_at(d - (mu0 - 1e-9)) > alpha.value());
    }
}

TEST_CASE("upper bounds clamp at zero and flag vacuity") {
    const ClampedBound plain = upper_bound_mu0(10.0, 1.0);
    CHECK(plain.value == doctest::Approx(-9.0).epsilon(1e-15));
    CHECK_FALSE(plain.clamped);

    const ClampedBound vacuous = upper_bound_mu0(kBernD, kBernMu0Alpha04);
    CHECK(vacuous.value == 0.0);
    CHECK(vacuous.clamped);

    const ClampedBound degenerate = upper_bound_mu0(0.0, 0.0);
    CHECK(degenerate.value == 0.0);
    CHECK(degenerate.clamped);

    const ClampedBound cheb = upper_bound_chebyshev(kGauss100D, kGauss100R1, Alpha(0.25));
    CHECK(cheb.value == doctest::Approx(kGauss100ChebAlpha025).epsilon(1e-13));
    CHECK_FALSE(cheb.clamped);

    const ClampedBound cheb_neutral = upper_bound_chebyshev(0.0, 0.0, Alpha(0.3));
    CHECK(cheb_neutral.value == 0.0);
    CHECK(cheb_neutral.clamped);
}

TEST_CASE("Chebyshev bound dominates the mu0 bound") {
    std::mt19937_64 rng(555u);
    for (int trial = 0; trial < 30; ++trial) {
        const Model model = Model(IidProductModel(random_pair(rng, 2 + rng() % 4),
                                                  1 + static_cast<std::int64_t>(rng() % 6)));
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        const LlrMoments m = llr_moments(model);
        for (const double a : {0.01, 0.05, 0.1, 0.25, 0.5}) {
            const double mu0 = mu0_exact(atoms, m.d, Alpha(a));
            CHECK(mu0 <= m.r1 / std::sqrt(a) + 1e-9);
            CHECK(upper_bound_mu0(m.d, mu0).value <=
                  upper_bound_chebyshev(m.d, m.r1, Alpha(a)).value + 1e-12);
        }
    }
}

TEST_CASE("MC mu0 matches chi-square quantile values for the Gaussian model") {
    const Model model = Model(GaussianScaleModel({2.0}));
    const std::size_t n = 400'000;

    const Mu0McResult at_025 = mu0_mc(model, Alpha(0.25), n, 91, 0);
    CHECK(std::abs(at_025.value - kGaussMu0Alpha025) < 0.02);
    CHECK_FALSE(at_025.clamped);

    const Mu0McResult at_01 = mu0_mc(model, Alpha(0.1), n, 91, 1);
    CHECK(std::abs(at_01.value - kGaussMu0Alpha01) < 0.02);

    // At alpha = 0.5 the true offset is negative, so the estimate clamps.
    const Mu0McResult at_05 = mu0_mc(model, Alpha(0.5), n, 91, 2);
    CHECK(at_05.value == 0.0);
    CHECK(at_05.clamped);

    // Quantile monotonicity on a shared stream.
    CHECK(mu0_mc(model, Alpha(0.1), n, 91, 3).value >=
          mu0_mc(model, Alpha(0.3), n, 91, 3).value);
}

TEST_CASE("MC mu0 bookkeeping and preconditions") {
    const Model model = Model(GaussianScaleModel({2.0}));
    const Mu0McResult res = mu0_mc(model, Alpha(0.25), 1000, 5, 9);
    CHECK(res.order_index == 750);
    CHECK(res.n_samples == 1000);
    CHECK(res.seed == 5);
    CHECK(res.stream == 9);
    CHECK(mu0_mc(model, Alpha(0.25), 1000, 5, 9).value == res.value);

    CHECK_THROWS_AS(mu0_mc(model, Alpha(0.01), 999, 5, 0), TooFewSamples);
    CHECK_NOTHROW(mu0_mc(model, Alpha(0.01), 1000, 5, 0));

    const Model neutral = Model(FiniteDistPair({0.5, 0.5}, {0.5, 0.5}));
    CHECK(mu0_mc(neutral, Alpha(0.3), 1000, 5, 0).value == 0.0);
}

TEST_CASE("threshold test error probabilities on the Bernoulli pair") {
    const Model model = Model(bernoulli_pair());

    const ThresholdTestResult wide = threshold_test_eval(model, 0.6, EvalMode::Exact);
    CHECK(wide.alpha_mu == 0.0);
    CHECK(wide.beta_mu == doctest::Approx(1.0).epsilon(1e-12));

    const ThresholdTestResult tight = threshold_test_eval(model, 0.3, EvalMode::Exact);
    CHECK(tight.alpha_mu == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tight.beta_mu == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(tight.beta_mu <= std::exp(-kBernD + 0.3) + 1e-12);

    const Model neutral = Model(FiniteDistPair({0.4, 0.6}, {0.4, 0.6}));
    const ThresholdTestResult all = threshold_test_eval(neutral, 0.5, EvalMode::Exact);
    CHECK(all.alpha_mu == 0.0);
    CHECK(all.beta_mu == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("threshold test proof inequality holds on a mu grid") {
    std::mt19937_64 rng(2718u);
    for (int trial = 0; trial < 20; ++trial) {
        const Model model = Model(IidProductModel(random_pair(rng, 2 + rng() % 4),
                                                  1 + static_cast<std::int64_t>(rng() % 5)));
        const LlrMoments m = llr_moments(model);
        for (int k = 0; k < 20; ++k) {
            const double mu = (m.d + 3 * m.r1 + 0.1) * static_cast<double>(k) / 19.0;
            const ThresholdTestResult res = threshold_test_eval(model, mu, EvalMode::Exact);
            CHECK(res.beta_mu <= std::exp(-m.d + mu) + 1e-12);
            CHECK(res.alpha_mu + res.beta_mu >= 0.0);
        }
    }
}

TEST_CASE("threshold test MC mode agrees with exact mode") {
    const Model model = Model(IidProductModel(bernoulli_pair(), 4));
    const ThresholdTestResult exact = threshold_test_eval(model, 0.9, EvalMode::Exact);
    const ThresholdTestResult mc =
        threshold_test_eval(model, 0.9, EvalMode::MonteCarlo, 100'000, 321, 0);
    CHECK(mc.mode == EvalMode::MonteCarlo);
    CHECK(std::abs(mc.alpha_mu - exact.alpha_mu) <= 4 * mc.alpha_std_error);
    CHECK(std::abs(mc.beta_mu - exact.beta_mu) <= 4 * mc.beta_std_error);

    CHECK_THROWS_AS(
        threshold_test_eval(Model(GaussianScaleModel({2.0})), 0.1, EvalMode::Exact),
        ExactUnavailable);
}

TEST_CASE("bounds report assembles the same numbers as the parts") {
    const Model model = Model(IidProductModel(bernoulli_pair(), 3));
    const Alpha alpha(0.1);
    const BoundsReport report = bounds_report(model, alpha);
    const LlrAtomDistribution atoms = llr_atoms_under_p(model);
    const LlrMoments m = llr_moments(model);

    CHECK(report.d == doctest::Approx(m.d).epsilon(1e-15));
    CHECK(report.r1 == doctest::Approx(m.r1).epsilon(1e-15));
    REQUIRE(report.mu0.has_value());
    CHECK(*report.mu0 == doctest::Approx(mu0_exact(atoms, m.d, alpha)).epsilon(1e-15));
    CHECK_FALSE(report.mu0_is_mc);
    CHECK(report.ln_beta_lower ==
          doctest::Approx(lower_bound_ln_beta(m.d, alpha)).epsilon(1e-15));
    REQUIRE(report.ln_beta_upper_mu0.has_value());
    CHECK(report.ln_beta_upper_cheb ==
          doctest::Approx(upper_bound_chebyshev(m.d, m.r1, alpha).value).epsilon(1e-15));
    CHECK(report.ln_beta_upper_cheb <= 0.0);

    // Continuous family: no mu0 without an MC budget; MC mu0 with one.
    const Model gauss = Model(GaussianScaleModel({2.0}));
    CHECK_FALSE(bounds_report(gauss, alpha).mu0.has_value());
    const BoundsReport mc_report = bounds_report(gauss, alpha, McConfig{10'000, 17}, 4);
    REQUIRE(mc_report.mu0.has_value());
    CHECK(mc_report.mu0_is_mc);
    CHECK(*mc_report.mu0 ==
          doctest::Approx(mu0_mc(gauss, alpha, 10'000, 17, 4).value).epsilon(1e-15));
}

TEST_CASE("bound sandwich on random discrete models") {
    std::mt19937_64 rng(90210u);
    for (int trial = 0; trial < 40; ++trial) {
        const Model model = Model(IidProductModel(random_pair(rng, 2 + rng() % 5),
                                                  1 + static_cast<std::int64_t>(rng() % 6)));
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        const LlrMoments m = llr_moments(model);
        for (const double a : {0.01, 0.05, 0.1, 0.25, 0.5}) {
            const Alpha alpha(a);
            const double ln_beta = beta_exact(atoms, alpha).ln_beta;
            CHECK(lower_bound_ln_beta(m.d, alpha) <= ln_beta + 1e-9);
            CHECK(ln_beta <= upper_bound_mu0(m.d, mu0_exact(atoms, m.d, alpha)).value + 1e-9);
            CHECK(ln_beta <= upper_bound_chebyshev(m.d, m.r1, alpha).value + 1e-9);
        }
    }
}

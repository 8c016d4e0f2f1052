#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "steinbounds/divergence.hpp"
#include "steinbounds/errors.hpp"
#include "steinbounds/models.hpp"
#include "steinbounds/rng.hpp"

#include "oracles.hpp"

using namespace stein;
using namespace testoracle;

TEST_CASE("pair construction rejects invalid mass vectors") {
    CHECK_THROWS_AS(FiniteDistPair({0.5, 0.5}, {0.0, 1.0}), InvalidModel);
    CHECK_THROWS_AS(FiniteDistPair({0.5, 0.5}, {-0.1, 1.1}), InvalidModel);
    CHECK_THROWS_AS(FiniteDistPair({0.6, 0.6}, {0.5, 0.5}), InvalidModel);
    CHECK_THROWS_AS(FiniteDistPair({0.5, 0.5}, {0.3, 0.3, 0.4}), InvalidModel);
    CHECK_THROWS_AS(FiniteDistPair({}, {}), InvalidModel);
    CHECK_NOTHROW(FiniteDistPair({1.0}, {1.0}));
}

TEST_CASE("model construction rejects invalid parameters") {
    CHECK_THROWS_AS(IidProductModel(bernoulli_pair(), 0), InvalidModel);
    CHECK_THROWS_AS(IidProductModel(bernoulli_pair(), -3), InvalidModel);
    CHECK_THROWS_AS(IndependentProductModel({}), InvalidModel);
    CHECK_THROWS_AS(GaussianScaleModel({1.0, 0.0}), InvalidModel);
    CHECK_THROWS_AS(GaussianScaleModel({-2.0}), InvalidModel);
    CHECK_THROWS_AS(GaussianScaleModel({}), InvalidModel);
    CHECK_THROWS_AS(PoissonPiecewiseModel({{0.0, 1.0, 1.0}}), InvalidModel);
    CHECK_THROWS_AS(PoissonPiecewiseModel({{1.0, 0.0, 1.0}}), InvalidModel);
    CHECK_THROWS_AS(PoissonPiecewiseModel({}), InvalidModel);
}

TEST_CASE("per-symbol LLR values") {
    const FiniteDistPair pair = bernoulli_pair();
    CHECK(pair.llr(0) == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(pair.llr(1) == doctest::Approx(kLn2Over3).epsilon(1e-15));
}

TEST_CASE("identical measures collapse to a single zero atom") {
    const LlrAtomDistribution atoms = llr_atoms_under_p(FiniteDistPair({0.5, 0.5}, {0.5, 0.5}));
    REQUIRE(atoms.size() == 1);
    CHECK(atoms.atoms()[0].value == 0.0);
    CHECK(atoms.atoms()[0].p_mass == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Bernoulli pair atoms and Q-masses") {
    const LlrAtomDistribution atoms = llr_atoms_under_p(bernoulli_pair());
    REQUIRE(atoms.size() == 2);
    CHECK(atoms.atoms()[0].value == doctest::Approx(kLn2Over3).epsilon(1e-15));
    CHECK(atoms.atoms()[0].p_mass == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(atoms.atoms()[1].value == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(atoms.atoms()[1].p_mass == doctest::Approx(0.5).epsilon(1e-15));

    const std::vector<double> q = q_masses(atoms);
    REQUIRE(q.size() == 2);
    CHECK(q[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("two-fold product lines up with the four-outcome enumeration") {
    const IidProductModel model(bernoulli_pair(), 2);
    const LlrAtomDistribution atoms = llr_atoms_under_p(model);
    REQUIRE(atoms.size() == 3);
    CHECK(atoms.atoms()[0].value == doctest::Approx(2 * kLn2Over3).epsilon(1e-15));
    CHECK(atoms.atoms()[0].p_mass == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(atoms.atoms()[1].value == doctest::Approx(kLn2 + kLn2Over3).epsilon(1e-14));
    CHECK(atoms.atoms()[1].p_mass == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(atoms.atoms()[2].value == doctest::Approx(2 * kLn2).epsilon(1e-15));
    CHECK(atoms.atoms()[2].p_mass == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("multinomial path matches the outcome enumeration oracle") {
    std::mt19937_64 rng(20240815u);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t alphabet = 2 + rng() % 3;
        const int n = 1 + static_cast<int>(rng() % 4);
        const FiniteDistPair base = random_pair(rng, alphabet);
        const auto expected = enumerate_iid_atoms(base, n);
        const LlrAtomDistribution got = llr_atoms_under_p(IidProductModel(base, n));
        REQUIRE(got.size() == expected.size());
        for (std::size_t k = 0; k < expected.size(); ++k) {
            CHECK(got.atoms()[k].value ==
                  doctest::Approx(expected[k].first).epsilon(1e-12));
            CHECK(got.atoms()[k].p_mass ==
                  doctest::Approx(expected[k].second).epsilon(1e-10));
        }
    }
}

TEST_CASE("convolution path matches the outcome enumeration oracle") {
    std::mt19937_64 rng(77101u);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<FiniteDistPair> components;
        const std::size_t count = 2 + rng() % 2;
        for (std::size_t i = 0; i < count; ++i)
            components.push_back(random_pair(rng, 2 + rng() % 3));
        const auto expected = enumerate_independent_atoms(components);
        const LlrAtomDistribution got =
            llr_atoms_under_p(IndependentProductModel(components));
        REQUIRE(got.size() == expected.size());
        for (std::size_t k = 0; k < expected.size(); ++k) {
            CHECK(got.atoms()[k].value ==
                  doctest::Approx(expected[k].first).epsilon(1e-12));
            CHECK(got.atoms()[k].p_mass ==
                  doctest::Approx(expected[k].second).epsilon(1e-10));
        }
    }
}

TEST_CASE("atom normalization identities hold on random products") {
    std::mt19937_64 rng(5150u);
    for (int trial = 0; trial < 25; ++trial) {
        const Model model = IidProductModel(random_pair(rng, 2 + rng() % 5),
                                            1 + static_cast<std::int64_t>(rng() % 7));
        const LlrAtomDistribution atoms = llr_atoms_under_p(model);
        double p_sum = 0.0;
        double q_sum = 0.0;
        double prev = -std::numeric_limits<double>::infinity();
        for (const auto& atom : atoms.atoms()) {
            CHECK(atom.value > prev);
            prev = atom.value;
            p_sum += atom.p_mass;
            q_sum += atom.p_mass * std::exp(-atom.value);
        }
        CHECK(p_sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(q_sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(atoms.mean() == doctest::Approx(kl_closed_form(model)).epsilon(1e-9));
    }
}

TEST_CASE("atom distribution validation rejects corrupted inputs") {
    CHECK_THROWS_AS(LlrAtomDistribution({{0.2, 0.5}, {0.1, 0.5}}), InvalidModel);
    // P-masses sum to 1 but the implied Q-masses do not.
    CHECK_THROWS_AS(LlrAtomDistribution({{0.1, 0.5}, {0.2, 0.5}}), InvalidModel);
    CHECK_THROWS_AS(LlrAtomDistribution({{kLn2Over3, 0.5}, {kLn2, 0.500001}}), InvalidModel);
    CHECK_NOTHROW(LlrAtomDistribution({{kLn2Over3, 0.5}, {kLn2, 0.5}}));
}

TEST_CASE("from_unsorted merges near-duplicate values") {
    const double v = kLn2;
    const LlrAtomDistribution merged = LlrAtomDistribution::from_unsorted(
        {{kLn2Over3, 0.5}, {v, 0.25}, {v + 1e-14, 0.25}});
    CHECK(merged.size() == 2);
    CHECK(merged.atoms()[1].p_mass == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("atom cap triggers CapExceeded") {
    // Six distinct per-symbol LLR values, so n = 40 projects to C(45,5)
    // composition atoms, far beyond the tiny cap.
    std::vector<double> p(6, 1.0 / 6.0);
    const FiniteDistPair base(p, {0.05, 0.1, 0.15, 0.2, 0.24, 0.26});
    CHECK_THROWS_AS(llr_atoms_under_p(Model(IidProductModel(base, 40)), 1000), CapExceeded);

    const std::vector<FiniteDistPair> many(13, base);
    CHECK_THROWS_AS(llr_atoms_under_p(Model(IndependentProductModel(many)), 1000),
                    CapExceeded);
}

TEST_CASE("continuous families have no exact atoms") {
    CHECK_THROWS_AS(llr_atoms_under_p(Model(GaussianScaleModel({2.0}))), ExactUnavailable);
    CHECK_THROWS_AS(llr_atoms_under_p(Model(PoissonPiecewiseModel({{1.0, 2.0, 1.0}}))),
                    ExactUnavailable);
}

TEST_CASE("family metadata") {
    CHECK(family_name(Model(bernoulli_pair())) == std::string("finite_discrete"));
    CHECK(family_name(Model(IidProductModel(bernoulli_pair(), 3))) ==
          std::string("iid_discrete"));
    CHECK(is_discrete(Model(IidProductModel(bernoulli_pair(), 3))));
    CHECK_FALSE(is_discrete(Model(GaussianScaleModel({2.0}))));
    CHECK_FALSE(is_discrete(Model(PoissonPiecewiseModel({{1.0, 2.0, 1.0}}))));
    CHECK(model_scale(Model(IidProductModel(bernoulli_pair(), 7))) == 7.0);
    CHECK(model_scale(Model(GaussianScaleModel({2.0, 0.5, 1.0}))) == 3.0);
    CHECK(model_scale(Model(PoissonPiecewiseModel({{1.5, 2.0, 1.0}, {2.5, 1.0, 2.0}}))) == 4.0);
}

TEST_CASE("degenerate samplers emit exactly zero") {
    RngStream stream(7, 0);
    for (const Model model : {Model(GaussianScaleModel({1.0})),
                              Model(PoissonPiecewiseModel({{1.0, 2.0, 2.0}}))}) {
        for (const double v : sample_llr(model, Hypothesis::P, stream, 200)) CHECK(v == 0.0);
        for (const double v : sample_llr(model, Hypothesis::Q, stream, 200)) CHECK(v == 0.0);
    }
}

TEST_CASE("discrete sampling hits atom values with the right frequencies") {
    const Model model = Model(bernoulli_pair());
    RngStream stream(99, 3);
    const std::size_t n = 100'000;
    const auto draws = sample_llr(model, Hypothesis::P, stream, n);
    std::size_t high = 0;
    for (const double v : draws) {
        const bool is_high = std::abs(v - kLn2) < 1e-12;
        const bool is_low = std::abs(v - kLn2Over3) < 1e-12;
        CHECK((is_high || is_low));
        high += is_high ? 1 : 0;
    }
    // P{LLR = ln 2} = 0.5; allow 4 standard errors of binomial noise.
    const double se = std::sqrt(0.25 / static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(high) / static_cast<double>(n) - 0.5) < 4 * se);
}

TEST_CASE("Gaussian sample mean approaches D under P and the swapped mean under Q") {
    const Model model = Model(GaussianScaleModel({2.0}));
    const std::size_t n = 100'000;
    RngStream p_stream(1234, 0);
    const auto p_draws = sample_llr(model, Hypothesis::P, p_stream, n);
    double p_mean = 0.0;
    double p_sq = 0.0;
    for (const double v : p_draws) {
        p_mean += v;
        p_sq += v * v;
    }
    p_mean /= static_cast<double>(n);
    const double p_se =
        std::sqrt((p_sq / static_cast<double>(n) - p_mean * p_mean) / static_cast<double>(n));
    CHECK(std::abs(p_mean - kGaussD) < 4 * p_se);

    RngStream q_stream(1234, 1);
    const auto q_draws = sample_llr(model, Hypothesis::Q, q_stream, n);
    double q_mean = 0.0;
    double q_sq = 0.0;
    for (const double v : q_draws) {
        q_mean += v;
        q_sq += v * v;
    }
    q_mean /= static_cast<double>(n);
    const double q_se =
        std::sqrt((q_sq / static_cast<double>(n) - q_mean * q_mean) / static_cast<double>(n));
    CHECK(std::abs(q_mean - kGaussMeanUnderQ) < 4 * q_se);
}

TEST_CASE("Poisson samples live on the count lattice") {
    const Model model = Model(PoissonPiecewiseModel({{1.0, 2.0, 1.0}}));
    RngStream stream(5, 11);
    const std::size_t n = 50'000;
    const auto draws = sample_llr(model, Hypothesis::P, stream, n);
    double mean = 0.0;
    double sq = 0.0;
    for (const double v : draws) {
        // LLR = N ln2 - 1 for a count N >= 0.
        const double k = (v + 1.0) / kLn2;
        CHECK(std::abs(k - std::round(k)) < 1e-9);
        CHECK(std::round(k) >= 0.0);
        mean += v;
        sq += v * v;
    }
    mean /= static_cast<double>(n);
    const double se =
        std::sqrt((sq / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
    CHECK(std::abs(mean - kPoissonD) < 4 * se);
}

TEST_CASE("samplers are deterministic per stream and differ across streams") {
    const Model model = Model(GaussianScaleModel({2.0, 0.5}));
    RngStream a(42, 9);
    RngStream b(42, 9);
    RngStream c(42, 10);
    RngStream d(43, 9);
    const auto draws_a = sample_llr(model, Hypothesis::P, a, 128);
    CHECK(draws_a == sample_llr(model, Hypothesis::P, b, 128));
    CHECK(draws_a != sample_llr(model, Hypothesis::P, c, 128));
    CHECK(draws_a != sample_llr(model, Hypothesis::P, d, 128));
}

TEST_CASE("Gaussian atoms are order-invariant in moments") {
    const Model forward = Model(GaussianScaleModel({2.0, 0.5, 1.25}));
    const Model reversed = Model(GaussianScaleModel({1.25, 0.5, 2.0}));
    CHECK(kl_closed_form(forward) == doctest::Approx(kl_closed_form(reversed)).epsilon(1e-15));
    CHECK(r1_closed_form(forward) == doctest::Approx(r1_closed_form(reversed)).epsilon(1e-15));
}

#include "steinbounds/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "steinbounds/errors.hpp"

namespace stein {

namespace {

void check_mass_vector(const std::vector<double>& v, const char* name) {
    if (v.empty()) {
        throw InvalidModel(std::string(name) + " must be non-empty");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0) || !std::isfinite(v[k])) {
            throw InvalidModel(std::string(name) + "[" + std::to_string(k) +
                               "] must be strictly positive (equivalence assumption)");
        }
        sum += v[k];
    }
    if (std::abs(sum - 1.0) > kMassSumTol) {
        throw InvalidModel(std::string(name) + " must sum to 1 within 1e-12, got " +
                           std::to_string(sum));
    }
}

bool values_mergeable(double a, double b) {
    return std::abs(a - b) <= kMergeRelTol * std::max(1.0, std::abs(a));
}

std::vector<LlrAtomDistribution::Atom> sort_and_merge(
    std::vector<LlrAtomDistribution::Atom> atoms) {
    std::sort(atoms.begin(), atoms.end(),
              [](const auto& a, const auto& b) { return a.value < b.value; });
    std::vector<LlrAtomDistribution::Atom> merged;
    merged.reserve(atoms.size());
    for (const auto& atom : atoms) {
        if (!merged.empty() && values_mergeable(merged.back().value, atom.value)) {
            merged.back().p_mass += atom.p_mass;
        } else {
            merged.push_back(atom);
        }
    }
    return merged;
}

}  // namespace

FiniteDistPair::FiniteDistPair(std::vector<double> p, std::vector<double> q)
    : p_(std::move(p)), q_(std::move(q)) {
    if (p_.size() != q_.size()) {
        throw InvalidModel("p and q must have equal length");
    }
    check_mass_vector(p_, "p");
    check_mass_vector(q_, "q");
}

double FiniteDistPair::llr(std::size_t k) const {
    return std::log(p_[k]) - std::log(q_[k]);
}

IidProductModel::IidProductModel(FiniteDistPair base_pair, std::int64_t count)
    : base(std::move(base_pair)), n(count) {
    if (n < 1) {
        throw InvalidModel("sample count n must be >= 1");
    }
}

IndependentProductModel::IndependentProductModel(std::vector<FiniteDistPair> comps)
    : components(std::move(comps)) {
    if (components.empty()) {
        throw InvalidModel("independent product needs at least one component");
    }
}

GaussianScaleModel::GaussianScaleModel(std::vector<double> lambdas)
    : eigenvalues(std::move(lambdas)) {
    if (eigenvalues.empty()) {
        throw InvalidModel("eigenvalue list must be non-empty");
    }
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i])) {
            throw InvalidModel("eigenvalue[" + std::to_string(i) +
                               "] must be strictly positive");
        }
    }
}

PoissonPiecewiseModel::PoissonPiecewiseModel(std::vector<Piece> segs)
    : pieces(std::move(segs)) {
    if (pieces.empty()) {
        throw InvalidModel("piece list must be non-empty");
    }
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        const auto& piece = pieces[k];
        if (!(piece.len > 0.0) || !(piece.p > 0.0) || !(piece.q > 0.0) ||
            !std::isfinite(piece.len) || !std::isfinite(piece.p) ||
            !std::isfinite(piece.q)) {
            throw InvalidModel("piece[" + std::to_string(k) +
                               "] fields len, p, q must be strictly positive");
        }
    }
}

double PoissonPiecewiseModel::total_time() const {
    double t = 0.0;
    for (const auto& piece : pieces) t += piece.len;
    return t;
}

const char* family_name(const Model& model) {
    return std::visit(
        [](const auto& m) -> const char* {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FiniteDistPair>) return "finite_discrete";
            if constexpr (std::is_same_v<T, IidProductModel>) return "iid_discrete";
            if constexpr (std::is_same_v<T, IndependentProductModel>)
                return "independent_discrete";
            if constexpr (std::is_same_v<T, GaussianScaleModel>) return "gaussian_scale";
            if constexpr (std::is_same_v<T, PoissonPiecewiseModel>)
                return "poisson_piecewise";
        },
        model);
}

bool is_discrete(const Model& model) {
    return !std::holds_alternative<GaussianScaleModel>(model) &&
           !std::holds_alternative<PoissonPiecewiseModel>(model);
}

double model_scale(const Model& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FiniteDistPair>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, IidProductModel>) {
                return static_cast<double>(m.n);
            } else if constexpr (std::is_same_v<T, IndependentProductModel>) {
                return static_cast<double>(m.components.size());
            } else if constexpr (std::is_same_v<T, GaussianScaleModel>) {
                return static_cast<double>(m.eigenvalues.size());
            } else {
                return m.total_time();
            }
        },
        model);
}

LlrAtomDistribution::LlrAtomDistribution(std::vector<Atom> atoms)
    : atoms_(std::move(atoms)) {
    if (atoms_.empty()) {
        throw InvalidModel("atom list must be non-empty");
    }
    double p_sum = 0.0;
    double q_sum = 0.0;
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
        if (!(atoms_[k].p_mass > 0.0) || !std::isfinite(atoms_[k].value)) {
            throw InvalidModel("atom[" + std::to_string(k) +
                               "] needs a finite value and positive mass");
        }
        if (k > 0 && !(atoms_[k - 1].value < atoms_[k].value)) {
            throw InvalidModel("atom values must be strictly increasing");
        }
        p_sum += atoms_[k].p_mass;
        q_sum += atoms_[k].p_mass * std::exp(-atoms_[k].value);
    }
    if (std::abs(p_sum - 1.0) > kAtomSumTol) {
        throw InvalidModel("P-masses must sum to 1 within 1e-9, got " +
                           std::to_string(p_sum));
    }
    if (std::abs(q_sum - 1.0) > kAtomSumTol) {
        throw InvalidModel("implied Q-masses must sum to 1 within 1e-9, got " +
                           std::to_string(q_sum));
    }
}

LlrAtomDistribution LlrAtomDistribution::from_unsorted(std::vector<Atom> atoms) {
    return LlrAtomDistribution(sort_and_merge(std::move(atoms)));
}

double LlrAtomDistribution::mean() const {
    double m = 0.0;
    for (const auto& atom : atoms_) m += atom.value * atom.p_mass;
    return m;
}

double LlrAtomDistribution::second_moment() const {
    double m = 0.0;
    for (const auto& atom : atoms_) m += atom.value * atom.value * atom.p_mass;
    return m;
}

std::vector<double> q_masses(const LlrAtomDistribution& atoms) {
    std::vector<double> q;
    q.reserve(atoms.size());
    for (const auto& atom : atoms.atoms()) {
        q.push_back(atom.p_mass * std::exp(-atom.value));
    }
    return q;
}

LlrAtomDistribution llr_atoms_under_p(const FiniteDistPair& pair) {
    std::vector<LlrAtomDistribution::Atom> atoms;
    atoms.reserve(pair.alphabet_size());
    for (std::size_t k = 0; k < pair.alphabet_size(); ++k) {
        atoms.push_back({pair.llr(k), pair.p()[k]});
    }
    return LlrAtomDistribution::from_unsorted(std::move(atoms));
}

namespace {

// Number of compositions of n into k parts, saturating at infinity.
double composition_count(std::int64_t n, std::size_t k) {
    return std::exp(std::lgamma(static_cast<double>(n + k)) -
                    std::lgamma(static_cast<double>(n + 1)) -
                    std::lgamma(static_cast<double>(k)));
}

// Recursive multinomial enumeration over count vectors for the distinct base
// LLR values. Mass is accumulated in log space: masses stay accurate even
// when individual multinomial weights are ~1e-120 (large n products).
void enumerate_counts(const std::vector<LlrAtomDistribution::Atom>& base,
                      std::size_t idx, std::int64_t remaining, double value,
                      double log_mass, double log_n_fact,
                      std::vector<LlrAtomDistribution::Atom>& out) {
    if (idx + 1 == base.size()) {
        const double c = static_cast<double>(remaining);
        const double lm = log_mass - std::lgamma(c + 1.0) +
                          c * std::log(base[idx].p_mass);
        out.push_back({value + c * base[idx].value, std::exp(log_n_fact + lm)});
        return;
    }
    for (std::int64_t c = 0; c <= remaining; ++c) {
        const double cd = static_cast<double>(c);
        enumerate_counts(base, idx + 1, remaining - c,
                         value + cd * base[idx].value,
                         log_mass - std::lgamma(cd + 1.0) +
                             cd * std::log(base[idx].p_mass),
                         log_n_fact, out);
    }
}

}  // namespace

LlrAtomDistribution llr_atoms_under_p(const IidProductModel& model, std::size_t cap) {
    const LlrAtomDistribution base = llr_atoms_under_p(model.base);
    const auto& base_atoms = base.atoms();
    const double projected = composition_count(model.n, base_atoms.size());
    if (projected > static_cast<double>(cap) * 1.000001) {
        throw CapExceeded("i.i.d. enumeration would produce ~" +
                          std::to_string(projected) + " atoms, cap is " +
                          std::to_string(cap));
    }
    std::vector<LlrAtomDistribution::Atom> out;
    out.reserve(static_cast<std::size_t>(projected) + 1);
    enumerate_counts(base_atoms, 0, model.n, 0.0, 0.0,
                     std::lgamma(static_cast<double>(model.n) + 1.0), out);
    return LlrAtomDistribution::from_unsorted(std::move(out));
}

LlrAtomDistribution llr_atoms_under_p(const IndependentProductModel& model,
                                      std::size_t cap) {
    std::vector<LlrAtomDistribution::Atom> acc =
        llr_atoms_under_p(model.components.front()).atoms();
    for (std::size_t i = 1; i < model.components.size(); ++i) {
        const auto next = llr_atoms_under_p(model.components[i]).atoms();
        if (acc.size() * next.size() > cap) {
            throw CapExceeded("convolution at component " + std::to_string(i) +
                              " would produce " +
                              std::to_string(acc.size() * next.size()) +
                              " atoms, cap is " + std::to_string(cap));
        }
        std::vector<LlrAtomDistribution::Atom> conv;
        conv.reserve(acc.size() * next.size());
        for (const auto& a : acc) {
            for (const auto& b : next) {
                conv.push_back({a.value + b.value, a.p_mass * b.p_mass});
            }
        }
        acc = sort_and_merge(std::move(conv));
    }
    return LlrAtomDistribution(std::move(acc));
}

LlrAtomDistribution llr_atoms_under_p(const Model& model, std::size_t cap) {
    if (const auto* pair = std::get_if<FiniteDistPair>(&model)) {
        return llr_atoms_under_p(*pair);
    }
    if (const auto* iid = std::get_if<IidProductModel>(&model)) {
        return llr_atoms_under_p(*iid, cap);
    }
    if (const auto* ind = std::get_if<IndependentProductModel>(&model)) {
        return llr_atoms_under_p(*ind, cap);
    }
    throw ExactUnavailable(std::string("no exact LLR atoms for family ") +
                           family_name(model));
}

namespace {

double sample_pair_llr(const FiniteDistPair& pair, Hypothesis hyp, RngStream& stream) {
    const auto& masses = hyp == Hypothesis::P ? pair.p() : pair.q();
    return pair.llr(stream.categorical(masses));
}

}  // namespace

std::vector<double> sample_llr(const Model& model, Hypothesis hyp,
                               RngStream& stream, std::size_t count) {
    if (count < 1) {
        throw InvalidInput("sample count must be >= 1");
    }
    std::vector<double> out(count);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FiniteDistPair>) {
                for (auto& v : out) v = sample_pair_llr(m, hyp, stream);
            } else if constexpr (std::is_same_v<T, IidProductModel>) {
                for (auto& v : out) {
                    double s = 0.0;
                    for (std::int64_t i = 0; i < m.n; ++i) {
                        s += sample_pair_llr(m.base, hyp, stream);
                    }
                    v = s;
                }
            } else if constexpr (std::is_same_v<T, IndependentProductModel>) {
                for (auto& v : out) {
                    double s = 0.0;
                    for (const auto& comp : m.components) {
                        s += sample_pair_llr(comp, hyp, stream);
                    }
                    v = s;
                }
            } else if constexpr (std::is_same_v<T, GaussianScaleModel>) {
                // Under P: x_i = xi_i; under Q: x_i^2 = lambda_i * xi_i^2.
                for (auto& v : out) {
                    double s = 0.0;
                    for (const double lambda : m.eigenvalues) {
                        const double xi = stream.normal();
                        const double x2 =
                            hyp == Hypothesis::P ? xi * xi : lambda * xi * xi;
                        s += std::log(lambda) + (1.0 / lambda - 1.0) * x2;
                    }
                    v = 0.5 * s;
                }
            } else {
                // Per piece: N_k * ln(p_k/q_k) - (p_k - q_k) * len_k, with
                // N_k Poisson of rate p_k*len_k under P or q_k*len_k under Q.
                for (auto& v : out) {
                    double s = 0.0;
                    for (const auto& piece : m.pieces) {
                        const double rate =
                            (hyp == Hypothesis::P ? piece.p : piece.q) * piece.len;
                        const double n_k = static_cast<double>(stream.poisson(rate));
                        s += n_k * (std::log(piece.p) - std::log(piece.q)) -
                             (piece.p - piece.q) * piece.len;
                    }
                    v = s;
                }
            }
        },
        model);
    return out;
}

}  // namespace stein

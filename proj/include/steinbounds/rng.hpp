#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stein {

// Seeded random stream with integer stream splitting. Two streams built from
// the same (seed, stream_id) produce identical draw sequences; distinct
// stream ids give statistically independent streams. The generator is
// mt19937_64 (bit-specified by the standard) and every distribution below is
// implemented directly on top of its raw output, so sequences are
// reproducible across compilers and platforms for a fixed libm.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed & 0xffffffffu),
            static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream_id & 0xffffffffu),
            static_cast<std::uint32_t>(stream_id >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Uniform on the open interval (0, 1); never returns an endpoint, so it
    // is safe under log().
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Consumes exactly two uniforms per draw.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Poisson count with the given mean, by sequential CDF inversion.
    // Means above the split threshold are drawn as sums of independent
    // smaller Poissons (additivity), keeping e^{-mean} representable.
    std::int64_t poisson(double mean) {
        std::int64_t total = 0;
        while (mean > kPoissonSplit) {
            total += poisson_small(kPoissonSplit);
            mean -= kPoissonSplit;
        }
        return total + poisson_small(mean);
    }

    // Index draw from a cumulative mass walk over `masses` (sums to ~1).
    // Returns the last index if rounding leaves the uniform above the total.
    template <typename Vec>
    std::size_t categorical(const Vec& masses) {
        const double u = uniform();
        double cum = 0.0;
        for (std::size_t k = 0; k + 1 < masses.size(); ++k) {
            cum += masses[k];
            if (u < cum) return k;
        }
        return masses.size() - 1;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    static constexpr double kPoissonSplit = 500.0;

    std::int64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-mean);
        double cum = p;
        std::int64_t k = 0;
        // Hard stop far in the tail; beyond it the simple recurrence stalls
        // in floating point anyway.
        const std::int64_t k_max =
            static_cast<std::int64_t>(mean + 60.0 * std::sqrt(mean) + 100.0);
        while (u > cum && k < k_max) {
            ++k;
            p *= mean / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

}  // namespace stein

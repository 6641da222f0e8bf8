#pragma once

// Seeded RNG wrapper. Normal deviates use an explicit Box-Muller transform
// instead of std::normal_distribution, whose output sequence is not pinned
// by the standard and differs between library implementations; everything
// downstream (init, gradcheck sampling, synthetic data) must be reproducible
// from the seed alone.

#include <cmath>
#include <cstdint>
#include <random>

namespace asymmkit {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1).
    double uniform() {
        // 53 random mantissa bits, the standard 64 -> double construction.
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Modulo bias is irrelevant here (n is tiny vs 2^64) and the simple
        // form keeps the draw count per call fixed, which determinism needs.
        return gen_() % n;
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace asymmkit

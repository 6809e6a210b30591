#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace qkdsim {

// splitmix64 step, used to decorrelate derived stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic RNG wrapper. Distribution sampling is implemented here rather
// than with std:: distributions so that results are identical across standard
// library implementations.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) : engine_(seed) {}

    // Independent substream: hash (seed, index) into a fresh engine seed.
    static rng_stream derive(std::uint64_t seed, std::uint64_t index) {
        std::uint64_t s = seed ^ (0x6a09e667f3bcc909ull + index * 0x9e3779b97f4a7c15ull);
        std::uint64_t a = splitmix64(s);
        std::uint64_t b = splitmix64(s);
        return rng_stream(a ^ (b << 1 | b >> 63));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Poisson sample. Inversion by sequential search for small means, normal
    // approximation (rounded, clamped at zero) above; the crossover keeps the
    // inversion loop short while the approximation error is far below the
    // statistical noise of any use in this library.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0) return 0;
        if (mean < 256.0) {
            double L = std::exp(-mean);
            double p = 1.0;
            std::uint64_t k = 0;
            do {
                ++k;
                p *= uniform01();
            } while (p > L);
            return k - 1;
        }
        double g = normal(mean, std::sqrt(mean));
        if (g < 0.5) return 0;
        return static_cast<std::uint64_t>(std::llround(g));
    }

    // Marsaglia polar method.
    double normal(double mu, double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return mu + sigma * spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return mu + sigma * u * f;
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // Rejection to avoid modulo bias.
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace qkdsim

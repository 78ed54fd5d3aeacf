#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>
#include <vector>

namespace efi::detail {

// std::mt19937_64 output is fully specified by the standard; the standard
// distributions are not, so the samplers below are written out to keep
// seeded results identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1)
            return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    // Box-Muller; one of the pair is discarded to keep the stream stateless.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + stddev * z;
    }

    // Knuth's multiplicative method for small means, normal approximation above 60.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0)
            return 0;
        if (mean > 60.0) {
            const double v = std::round(normal(mean, std::sqrt(mean)));
            return v < 0.0 ? 0 : static_cast<std::uint64_t>(v);
        }
        const double l = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// FNV-1a over the stage name mixed with the run seed.
inline std::uint64_t sub_seed(std::uint64_t seed, std::string_view stage) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64(seed ^ h);
}

} // namespace efi::detail

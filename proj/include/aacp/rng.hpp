#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aacp {

// Seeded random source with platform-stable derivations. std::mt19937_64 is
// specified bit-exactly by the standard; the distribution helpers below avoid
// std::uniform_*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection-debiased.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n <= 1) return 0;
        while (true) {
            const std::uint64_t x = next_u64();
            const std::uint64_t r = x % n;
            if (x - r <= ~std::uint64_t{0} - (n - 1)) return r;
        }
    }

    // Standard normal via Box-Muller (one value per call, no cached pair).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // splitmix64 finalizer; used to derive independent streams from one seed.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(a ^ mix(b)); }

private:
    std::mt19937_64 gen_;
};

}  // namespace aacp

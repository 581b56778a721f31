#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace chanest {

/// SplitMix64 step; used to scramble seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Derives a child seed from (master, index). Used so that parallel work
/// units (dataset examples, MC passes, fading taps) each get their own
/// statistically independent stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master;
    splitmix64(s);
    s ^= 0xD1B54A32D192ED03ull * (index + 1);
    return splitmix64(s);
}

/// Deterministic random source. All distributions are implemented on top of
/// the raw mt19937_64 output so results do not depend on the standard
/// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // Scramble the seed so that nearby seeds (e.g. master ^ index)
        // produce uncorrelated streams.
        std::uint64_t s = seed;
        engine_.seed(splitmix64(s));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1].
    double uniform_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine here: n is always tiny compared to
        // 2^64, so the bias is negligible for simulation purposes; what
        // matters is determinism.
        return engine_() % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller (cosine branch only).
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Circularly symmetric complex normal with E|z|^2 = 1.
    std::complex<double> cnormal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-std::log(u1));
        return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace chanest

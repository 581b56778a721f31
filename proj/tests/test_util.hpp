#pragma once

#include <complex>
#include <vector>

#include "chanest/channel.hpp"
#include "chanest/grid.hpp"
#include "chanest/rng.hpp"
#include "chanest/tdl.hpp"

namespace chanest::test {

/// Single-profile tap table built directly (bypasses the bundled file).
inline TdlProfile make_custom_profile(const std::vector<double>& delays,
                                      const std::vector<double>& linear_powers) {
    TdlProfile p;
    p.name = TdlProfileName::TdlA;
    double total = 0.0;
    for (double w : linear_powers) total += w;
    for (std::size_t i = 0; i < delays.size(); ++i) {
        p.taps.push_back({delays[i], 10.0 * std::log10(linear_powers[i]), false});
        p.linear_powers.push_back(linear_powers[i] / total);
    }
    return p;
}

/// Time-invariant channel with explicit complex tap gains and sample delays.
inline ChannelRealization make_static_realization(const std::vector<cd>& gains,
                                                  const std::vector<int>& delays,
                                                  std::size_t num_samples,
                                                  double sample_rate_hz) {
    ChannelRealization ch;
    ch.sample_rate_hz = sample_rate_hz;
    ch.delay_spread_ns = 1.0;
    ch.max_doppler_hz = 0.0;
    ch.tap_delays_samples = delays;
    for (const cd& g : gains) {
        ch.tap_gains.emplace_back(num_samples, g);
        ch.weights.push_back(1.0);
    }
    return ch;
}

inline std::vector<cd> random_samples(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<cd> v(n);
    for (cd& s : v) s = rng.cnormal();
    return v;
}

inline ComplexGrid random_grid(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    ComplexGrid g(rows, cols);
    for (cd& v : g.data()) v = rng.cnormal();
    return g;
}

inline double max_abs_diff(const ComplexGrid& a, const ComplexGrid& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace chanest::test

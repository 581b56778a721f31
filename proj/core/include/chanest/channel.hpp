#pragma once

#include <cstdint>
#include <vector>

#include "chanest/grid.hpp"
#include "chanest/ofdm.hpp"
#include "chanest/tdl.hpp"

namespace chanest {

/// Time-varying realization of a TDL profile at a given delay spread,
/// Doppler and sample rate. tap_gains holds the unit-average-power fading
/// series per tap (before power weighting); tap delays are rounded to
/// integer samples.
struct ChannelRealization {
    TdlProfile profile;
    double delay_spread_ns = 0.0;
    double max_doppler_hz = 0.0;
    double sample_rate_hz = 0.0;
    std::vector<std::vector<cd>> tap_gains;  // [tap][sample]
    std::vector<int> tap_delays_samples;
    std::uint64_t seed = 0;

    std::size_t num_samples() const {
        return tap_gains.empty() ? 0 : tap_gains.front().size();
    }
    std::size_t num_taps() const { return tap_gains.size(); }

    /// Power-weighted gain of tap l at sample n.
    cd weighted_gain(std::size_t l, std::size_t n) const {
        return weights[l] * tap_gains[l][n];
    }

    std::vector<double> weights;  // sqrt(normalized linear power) per tap
};

/// Number of sinusoids per tap in the sum-of-sinusoids fading generator.
inline constexpr int kFadingSinusoids = 16;

/// Realizes Rayleigh (sum-of-sinusoids) fading for each tap, with a
/// deterministic Rician component on the LOS tap of TDL-D/E profiles.
/// Zero Doppler degenerates to a constant unit-magnitude phasor per tap.
/// Identical arguments (including seed) give a bit-identical realization.
ChannelRealization realize_channel(const TdlProfile& profile, double delay_spread_ns,
                                   double max_doppler_hz, std::size_t num_samples,
                                   double sample_rate_hz, std::uint64_t seed);

/// y[n] = sum_l w_l * g_l[n] * x[n - d_l], x[k<0] = 0. Output length equals
/// input length. Sample rates and lengths must match the realization.
Waveform apply_channel(const Waveform& x, const ChannelRealization& ch);

/// Adds circular complex Gaussian noise at the given SNR (dB) relative to
/// the measured average power of x. snr_db = +infinity returns x unchanged.
Waveform add_awgn(const Waveform& x, double snr_db, std::uint64_t seed);

/// True channel frequency response per resource element:
/// H[k, m] = sum_l mean_gain_l(m) * exp(-j 2 pi f_k d_l / NFFT), where
/// mean_gain_l(m) averages tap l over symbol m's sample span (CP included)
/// and f_k is the signed subcarrier frequency. This is the regression
/// target ("perfect" channel).
ComplexGrid perfect_channel_grid(const ChannelRealization& ch, const OfdmConfig& cfg);

}  // namespace chanest

#include "chanest/channel.hpp"

#include <cmath>

#include "chanest/errors.hpp"
#include "chanest/rng.hpp"

namespace chanest {

namespace {

/// Sum-of-sinusoids Rayleigh fading (Zheng-Xiao form): I and Q are sums of
/// M cosines with arrival angles alpha_n = (2 pi n - pi + theta) / (4 M)
/// and independent random phases. E|g|^2 = 1. Sinusoids advance by phasor
/// rotation; the accumulated rounding over a slot is far below the test
/// tolerances.
void rayleigh_fading(std::vector<cd>& out, double max_doppler_hz, double sample_rate_hz,
                     Rng& rng) {
    const std::size_t n = out.size();
    const int m_sin = kFadingSinusoids;

    if (max_doppler_hz == 0.0) {
        double phi = rng.uniform(-M_PI, M_PI);
        cd g(std::cos(phi), std::sin(phi));
        std::fill(out.begin(), out.end(), g);
        return;
    }

    double theta = rng.uniform(-M_PI, M_PI);
    std::vector<cd> phase_i(m_sin), step_i(m_sin), phase_q(m_sin), step_q(m_sin);
    const double wd = 2.0 * M_PI * max_doppler_hz / sample_rate_hz;
    for (int s = 0; s < m_sin; ++s) {
        double alpha = (2.0 * M_PI * (s + 1) - M_PI + theta) / (4.0 * m_sin);
        double phi = rng.uniform(-M_PI, M_PI);
        double psi = rng.uniform(-M_PI, M_PI);
        phase_i[s] = cd(std::cos(phi), std::sin(phi));
        phase_q[s] = cd(std::cos(psi), std::sin(psi));
        double wi = wd * std::cos(alpha);
        double wq = wd * std::sin(alpha);
        step_i[s] = cd(std::cos(wi), std::sin(wi));
        step_q[s] = cd(std::cos(wq), std::sin(wq));
    }

    const double scale = std::sqrt(1.0 / m_sin);
    for (std::size_t t = 0; t < n; ++t) {
        double gi = 0.0, gq = 0.0;
        for (int s = 0; s < m_sin; ++s) {
            gi += phase_i[s].real();
            gq += phase_q[s].real();
            phase_i[s] *= step_i[s];
            phase_q[s] *= step_q[s];
        }
        out[t] = cd(scale * gi, scale * gq);
    }
}

}  // namespace

ChannelRealization realize_channel(const TdlProfile& profile, double delay_spread_ns,
                                   double max_doppler_hz, std::size_t num_samples,
                                   double sample_rate_hz, std::uint64_t seed) {
    if (delay_spread_ns <= 0.0) throw InvalidParameter("delay spread must be positive");
    if (max_doppler_hz < 0.0) throw InvalidParameter("doppler must be non-negative");
    if (num_samples == 0) throw InvalidParameter("num_samples must be positive");
    if (sample_rate_hz <= 0.0) throw InvalidParameter("sample rate must be positive");

    ChannelRealization ch;
    ch.profile = profile;
    ch.delay_spread_ns = delay_spread_ns;
    ch.max_doppler_hz = max_doppler_hz;
    ch.sample_rate_hz = sample_rate_hz;
    ch.seed = seed;

    const std::size_t L = profile.num_taps();
    ch.tap_gains.resize(L);
    ch.tap_delays_samples.resize(L);
    ch.weights.resize(L);

    for (std::size_t l = 0; l < L; ++l) {
        const TdlTap& tap = profile.taps[l];
        ch.tap_delays_samples[l] = static_cast<int>(std::llround(
            tap.normalized_delay * delay_spread_ns * 1e-9 * sample_rate_hz));
        ch.weights[l] = std::sqrt(profile.linear_powers[l]);

        Rng rng(derive_seed(seed, l));
        ch.tap_gains[l].resize(num_samples);

        if (tap.is_los) {
            // Rician tap: deterministic component at a seeded arrival angle
            // plus diffuse Rayleigh fading, split by the K-factor.
            double k_lin = std::pow(10.0, profile.rician_k_db / 10.0);
            double los_amp = std::sqrt(k_lin / (k_lin + 1.0));
            double diffuse_amp = std::sqrt(1.0 / (k_lin + 1.0));
            double theta_los = rng.uniform(-M_PI, M_PI);
            double phi0 = rng.uniform(-M_PI, M_PI);
            double w_los = 2.0 * M_PI * max_doppler_hz * std::cos(theta_los) / sample_rate_hz;

            std::vector<cd> diffuse(num_samples);
            rayleigh_fading(diffuse, max_doppler_hz, sample_rate_hz, rng);

            cd los(std::cos(phi0), std::sin(phi0));
            cd los_step(std::cos(w_los), std::sin(w_los));
            for (std::size_t t = 0; t < num_samples; ++t) {
                ch.tap_gains[l][t] = los_amp * los + diffuse_amp * diffuse[t];
                los *= los_step;
            }
        } else {
            rayleigh_fading(ch.tap_gains[l], max_doppler_hz, sample_rate_hz, rng);
        }
    }
    return ch;
}

Waveform apply_channel(const Waveform& x, const ChannelRealization& ch) {
    if (x.sample_rate_hz != ch.sample_rate_hz)
        throw ShapeMismatch("apply_channel: sample rate mismatch");
    if (x.samples.size() != ch.num_samples())
        throw ShapeMismatch("apply_channel: waveform/fading length mismatch");

    const std::size_t n = x.samples.size();
    Waveform y;
    y.sample_rate_hz = x.sample_rate_hz;
    y.samples.assign(n, cd(0.0, 0.0));
    for (std::size_t l = 0; l < ch.num_taps(); ++l) {
        const int d = ch.tap_delays_samples[l];
        const double w = ch.weights[l];
        const auto& g = ch.tap_gains[l];
        for (std::size_t t = static_cast<std::size_t>(d); t < n; ++t) {
            y.samples[t] += w * g[t] * x.samples[t - d];
        }
    }
    return y;
}

Waveform add_awgn(const Waveform& x, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0) return x;

    double power = 0.0;
    for (const cd& v : x.samples) power += std::norm(v);
    if (x.samples.empty() || power == 0.0)
        throw InvalidParameter("add_awgn: signal has zero power");
    power /= static_cast<double>(x.samples.size());

    const double noise_power = power * std::pow(10.0, -snr_db / 10.0);
    const double amp = std::sqrt(noise_power);

    Waveform y = x;
    Rng rng(derive_seed(seed, 0x6177676eull));  // "awgn"
    for (cd& v : y.samples) v += amp * rng.cnormal();
    return y;
}

ComplexGrid perfect_channel_grid(const ChannelRealization& ch, const OfdmConfig& cfg) {
    cfg.validate();
    const std::size_t slot_len = static_cast<std::size_t>(cfg.slot_length_samples());
    if (ch.num_samples() < slot_len)
        throw ShapeMismatch("perfect_channel_grid: realization shorter than slot");

    const std::size_t L = ch.num_taps();
    const int n_sym = cfg.symbols_per_slot;
    const int n_sc = cfg.num_subcarriers;

    // Mean weighted tap gain over each symbol's span (CP + body).
    std::vector<std::vector<cd>> mean_gain(L, std::vector<cd>(n_sym));
    std::size_t pos = 0;
    for (int m = 0; m < n_sym; ++m) {
        const std::size_t span = cfg.cp_lengths_samples[m] + cfg.nfft;
        for (std::size_t l = 0; l < L; ++l) {
            cd acc(0.0, 0.0);
            for (std::size_t t = pos; t < pos + span; ++t) acc += ch.tap_gains[l][t];
            mean_gain[l][m] = ch.weights[l] * acc / static_cast<double>(span);
        }
        pos += span;
    }

    ComplexGrid grid(n_sc, n_sym);
    for (std::size_t l = 0; l < L; ++l) {
        const double d = static_cast<double>(ch.tap_delays_samples[l]);
        for (int k = 0; k < n_sc; ++k) {
            const double ang = -2.0 * M_PI * cfg.subcarrier_frequency(k) * d / cfg.nfft;
            const cd ramp(std::cos(ang), std::sin(ang));
            for (int m = 0; m < n_sym; ++m) grid(k, m) += mean_gain[l][m] * ramp;
        }
    }
    return grid;
}

}  // namespace chanest

#include "chanest/ofdm.hpp"

#include <algorithm>
#include <cmath>

#include "chanest/errors.hpp"
#include "chanest/rng.hpp"

namespace chanest {

void OfdmConfig::validate() const {
    if (nfft <= 0 || (nfft & (nfft - 1)) != 0)
        throw InvalidParameter("nfft must be a positive power of two");
    if (num_subcarriers <= 0 || num_subcarriers > nfft)
        throw InvalidParameter("num_subcarriers must be in (0, nfft]");
    if (symbols_per_slot <= 0)
        throw InvalidParameter("symbols_per_slot must be positive");
    if (static_cast<int>(cp_lengths_samples.size()) != symbols_per_slot)
        throw InvalidParameter("cp_lengths_samples size must equal symbols_per_slot");
    for (int cp : cp_lengths_samples)
        if (cp <= 0) throw InvalidParameter("cp lengths must be positive");
    if (sample_rate_hz <= 0) throw InvalidParameter("sample_rate_hz must be positive");
}

bool PilotConfig::is_pilot(int k, int m) const {
    if (k % subcarrier_stride != subcarrier_offset) return false;
    return std::find(pilot_symbol_indices.begin(), pilot_symbol_indices.end(), m) !=
           pilot_symbol_indices.end();
}

std::vector<int> PilotConfig::pilot_subcarriers(const OfdmConfig& cfg) const {
    std::vector<int> ks;
    for (int k = subcarrier_offset; k < cfg.num_subcarriers; k += subcarrier_stride)
        ks.push_back(k);
    return ks;
}

PilotConfig make_pilot_config(const OfdmConfig& cfg, std::uint64_t seed,
                              std::vector<int> symbol_indices, int subcarrier_stride,
                              int subcarrier_offset) {
    if (subcarrier_stride <= 0) throw InvalidParameter("pilot stride must be positive");
    if (subcarrier_offset < 0 || subcarrier_offset >= subcarrier_stride)
        throw InvalidParameter("pilot offset must be in [0, stride)");
    std::sort(symbol_indices.begin(), symbol_indices.end());
    for (int m : symbol_indices)
        if (m < 0 || m >= cfg.symbols_per_slot)
            throw InvalidParameter("pilot symbol index out of range");

    PilotConfig pilots;
    pilots.pilot_symbol_indices = std::move(symbol_indices);
    pilots.subcarrier_stride = subcarrier_stride;
    pilots.subcarrier_offset = subcarrier_offset;
    pilots.sequence_seed = seed;

    Rng rng(derive_seed(seed, 0x70696c6f74ull));  // "pilot"
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::size_t per_symbol = pilots.pilot_subcarriers(cfg).size();
    pilots.pilot_values.reserve(per_symbol * pilots.pilot_symbol_indices.size());
    for (std::size_t i = 0; i < per_symbol * pilots.pilot_symbol_indices.size(); ++i) {
        double re = rng.bernoulli(0.5) ? inv_sqrt2 : -inv_sqrt2;
        double im = rng.bernoulli(0.5) ? inv_sqrt2 : -inv_sqrt2;
        pilots.pilot_values.emplace_back(re, im);
    }
    return pilots;
}

std::vector<cd> qam16_modulate(const std::vector<std::uint8_t>& bits) {
    if (bits.size() % 4 != 0)
        throw InvalidLength("qam16: bit count must be divisible by 4");
    const double scale = 1.0 / std::sqrt(10.0);
    std::vector<cd> out(bits.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int b0 = bits[4 * i] & 1;
        int b1 = bits[4 * i + 1] & 1;
        int b2 = bits[4 * i + 2] & 1;
        int b3 = bits[4 * i + 3] & 1;
        double re = (1 - 2 * b0) * (2 - (1 - 2 * b2));
        double im = (1 - 2 * b1) * (2 - (1 - 2 * b3));
        out[i] = cd(re * scale, im * scale);
    }
    return out;
}

std::size_t num_payload_res(const OfdmConfig& cfg, const PilotConfig& pilots) {
    std::size_t total = static_cast<std::size_t>(cfg.num_subcarriers) * cfg.symbols_per_slot;
    return total - pilots.num_pilots();
}

ComplexGrid build_resource_grid(const std::vector<std::uint8_t>& payload_bits,
                                const OfdmConfig& cfg, const PilotConfig& pilots) {
    cfg.validate();
    std::size_t need = 4 * num_payload_res(cfg, pilots);
    if (payload_bits.size() != need)
        throw InvalidLength("payload bits: expected " + std::to_string(need) + ", got " +
                            std::to_string(payload_bits.size()));

    std::vector<cd> payload = qam16_modulate(payload_bits);
    ComplexGrid grid(cfg.num_subcarriers, cfg.symbols_per_slot);
    std::size_t pilot_idx = 0, payload_idx = 0;
    for (int m = 0; m < cfg.symbols_per_slot; ++m) {
        bool pilot_symbol =
            std::find(pilots.pilot_symbol_indices.begin(), pilots.pilot_symbol_indices.end(),
                      m) != pilots.pilot_symbol_indices.end();
        for (int k = 0; k < cfg.num_subcarriers; ++k) {
            if (pilot_symbol && k % pilots.subcarrier_stride == pilots.subcarrier_offset) {
                grid(k, m) = pilots.pilot_values[pilot_idx++];
            } else {
                grid(k, m) = payload[payload_idx++];
            }
        }
    }
    return grid;
}

ComplexGrid build_resource_grid(const OfdmConfig& cfg, const PilotConfig& pilots,
                                std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x7061796c6f6164ull));  // "payload"
    std::vector<std::uint8_t> bits(4 * num_payload_res(cfg, pilots));
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1);
    return build_resource_grid(bits, cfg, pilots);
}

void fft_unitary(std::vector<cd>& x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw InvalidParameter("fft size must be a power of two");

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        cd wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cd u = x[i + k];
                cd v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (cd& v : x) v *= scale;
}

Waveform ofdm_modulate(const ComplexGrid& grid, const OfdmConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(grid.rows()) != cfg.num_subcarriers ||
        static_cast<int>(grid.cols()) != cfg.symbols_per_slot)
        throw ShapeMismatch("ofdm_modulate: grid shape does not match config");

    Waveform wave;
    wave.sample_rate_hz = cfg.sample_rate_hz;
    wave.samples.reserve(cfg.slot_length_samples());

    std::vector<cd> freq(cfg.nfft);
    std::vector<cd> prev_tail;  // cyclic continuation of the previous symbol
    for (int m = 0; m < cfg.symbols_per_slot; ++m) {
        std::fill(freq.begin(), freq.end(), cd(0.0, 0.0));
        for (int k = 0; k < cfg.num_subcarriers; ++k)
            freq[cfg.subcarrier_bin(k)] = grid(k, m);
        fft_unitary(freq, /*inverse=*/true);

        int cp = cfg.cp_lengths_samples[m];
        std::size_t start = wave.samples.size();
        for (int i = cfg.nfft - cp; i < cfg.nfft; ++i) wave.samples.push_back(freq[i]);
        for (int i = 0; i < cfg.nfft; ++i) wave.samples.push_back(freq[i]);

        if (cfg.windowing_enabled && cfg.windowing_samples > 0) {
            int w = std::min(cfg.windowing_samples, cp);
            if (m > 0 && static_cast<int>(prev_tail.size()) >= w) {
                // Raised-cosine cross-fade between the previous symbol's
                // cyclic extension and this symbol's CP head. Only the first
                // w CP samples change, so demodulation (which skips the CP)
                // is unaffected for delays < cp - w.
                for (int i = 0; i < w; ++i) {
                    double t = (static_cast<double>(i) + 0.5) / w;
                    double ramp = 0.5 * (1.0 - std::cos(M_PI * t));
                    wave.samples[start + i] =
                        ramp * wave.samples[start + i] + (1.0 - ramp) * prev_tail[i];
                }
            }
            prev_tail.assign(freq.begin(), freq.begin() + std::min(cfg.windowing_samples,
                                                                   cfg.nfft));
        }
    }
    return wave;
}

ComplexGrid ofdm_demodulate(const Waveform& wave, const OfdmConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(wave.samples.size()) != cfg.slot_length_samples())
        throw ShapeMismatch("ofdm_demodulate: waveform length is not one slot");

    ComplexGrid grid(cfg.num_subcarriers, cfg.symbols_per_slot);
    std::vector<cd> buf(cfg.nfft);
    std::size_t pos = 0;
    for (int m = 0; m < cfg.symbols_per_slot; ++m) {
        pos += cfg.cp_lengths_samples[m];
        std::copy(wave.samples.begin() + pos, wave.samples.begin() + pos + cfg.nfft,
                  buf.begin());
        pos += cfg.nfft;
        fft_unitary(buf, /*inverse=*/false);
        for (int k = 0; k < cfg.num_subcarriers; ++k)
            grid(k, m) = buf[cfg.subcarrier_bin(k)];
    }
    return grid;
}

}  // namespace chanest

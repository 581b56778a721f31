#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "chanest/grid.hpp"

namespace chanest {

struct Waveform {
    std::vector<cd> samples;
    double sample_rate_hz = 0.0;

    std::size_t size() const { return samples.size(); }
};

/// CP-OFDM numerology. Defaults follow a 30 kHz-subcarrier-spacing slot at
/// 30.72 Msps: NFFT 1024, 14 symbols, 612 active subcarriers (51 RBs),
/// 0.5 ms slot = 15360 samples. The first symbol carries the longer CP
/// (start of a half-subframe).
struct OfdmConfig {
    int nfft = 1024;
    double sample_rate_hz = 30'720'000.0;
    int num_subcarriers = 612;
    int symbols_per_slot = 14;
    std::vector<int> cp_lengths_samples = default_cp_lengths();
    int windowing_samples = 36;
    bool windowing_enabled = false;  // raised-cosine symbol transitions
    int slots_per_subframe = 2;
    int slots_per_frame = 20;

    static std::vector<int> default_cp_lengths() {
        std::vector<int> cp(14, 72);
        cp[0] = 88;
        return cp;
    }

    int slot_length_samples() const {
        int n = 0;
        for (int cp : cp_lengths_samples) n += cp + nfft;
        return n;
    }

    /// Signed baseband frequency index of subcarrier k (bins are centered
    /// on DC: k = num_subcarriers/2 maps to frequency 0).
    int subcarrier_frequency(int k) const { return k - num_subcarriers / 2; }

    /// Absolute FFT bin of subcarrier k.
    int subcarrier_bin(int k) const {
        int f = subcarrier_frequency(k);
        return (f % nfft + nfft) % nfft;
    }

    void validate() const;  // throws InvalidParameter
};

/// Pilot (DM-RS-like) layout: a frequency comb on a set of pilot symbols,
/// with seeded unit-magnitude QPSK values. RE (k, m) is a pilot iff m is in
/// pilot_symbol_indices and k % subcarrier_stride == subcarrier_offset.
struct PilotConfig {
    std::vector<int> pilot_symbol_indices = {2, 11};
    int subcarrier_stride = 2;
    int subcarrier_offset = 0;
    std::uint64_t sequence_seed = 0;
    std::vector<cd> pilot_values;  // scan order: pilot symbols asc, subcarriers asc

    bool is_pilot(int k, int m) const;
    std::size_t num_pilots() const { return pilot_values.size(); }
    std::vector<int> pilot_subcarriers(const OfdmConfig& cfg) const;
};

/// Builds a PilotConfig for the given grid geometry, drawing the QPSK pilot
/// sequence from `seed`.
PilotConfig make_pilot_config(const OfdmConfig& cfg, std::uint64_t seed,
                              std::vector<int> symbol_indices = {2, 11},
                              int subcarrier_stride = 2, int subcarrier_offset = 0);

/// Gray-mapped 16QAM (TS 38.211 style), unit average constellation power.
/// Bit count must be divisible by 4.
std::vector<cd> qam16_modulate(const std::vector<std::uint8_t>& bits);

/// Number of payload (non-pilot) REs, and the payload bit count they need.
std::size_t num_payload_res(const OfdmConfig& cfg, const PilotConfig& pilots);

/// Fills a resource grid: pilot REs take the pilot sequence, all other REs
/// carry 16QAM payload. `payload_bits` must contain exactly
/// 4 * num_payload_res bits. Payload REs are filled symbol-major (symbol
/// index outer, subcarrier inner).
ComplexGrid build_resource_grid(const std::vector<std::uint8_t>& payload_bits,
                                const OfdmConfig& cfg, const PilotConfig& pilots);

/// Convenience: random payload bits drawn from `seed`.
ComplexGrid build_resource_grid(const OfdmConfig& cfg, const PilotConfig& pilots,
                                std::uint64_t seed);

/// CP-OFDM modulation: per symbol, map subcarriers to centered bins, unitary
/// IDFT, prepend cyclic prefix. Optional raised-cosine cross-fade over the
/// first windowing_samples of each CP when cfg.windowing_enabled.
Waveform ofdm_modulate(const ComplexGrid& grid, const OfdmConfig& cfg);

/// Inverse of ofdm_modulate: strip CP, unitary DFT, extract centered bins.
/// Waveform length must be exactly one slot.
ComplexGrid ofdm_demodulate(const Waveform& wave, const OfdmConfig& cfg);

/// In-place unitary radix-2 FFT (inverse = true for IDFT). Size must be a
/// power of two.
void fft_unitary(std::vector<cd>& x, bool inverse);

}  // namespace chanest

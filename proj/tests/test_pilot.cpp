#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "chanest/channel.hpp"
#include "chanest/errors.hpp"
#include "chanest/pilot.hpp"
#include "test_util.hpp"

using namespace chanest;
using namespace chanest::test;

namespace {

SparseEstimate lattice_estimate(std::vector<int> symbols, std::vector<int> subcarriers,
                                const std::function<cd(int, int)>& value) {
    SparseEstimate est;
    est.pilot_symbols = std::move(symbols);
    est.pilot_subcarriers = std::move(subcarriers);
    for (int m : est.pilot_symbols)
        for (int k : est.pilot_subcarriers) est.entries.push_back({k, m, value(k, m)});
    return est;
}

}  // namespace

TEST_CASE("LS on a flat gain-2 channel returns 2 at every pilot") {
    OfdmConfig cfg;
    PilotConfig pilots = make_pilot_config(cfg, 5);
    ComplexGrid tx = build_resource_grid(cfg, pilots, 3);
    ComplexGrid rx = tx;
    for (cd& v : rx.data()) v *= 2.0;

    SparseEstimate est = ls_estimate_at_pilots(rx, pilots);
    CHECK(est.entries.size() == pilots.num_pilots());
    for (const auto& e : est.entries) CHECK(std::abs(e.value - cd(2, 0)) <= 1e-12);
}

TEST_CASE("LS on the identity channel returns 1 at every pilot") {
    OfdmConfig cfg;
    PilotConfig pilots = make_pilot_config(cfg, 5);
    ComplexGrid tx = build_resource_grid(cfg, pilots, 4);
    SparseEstimate est = ls_estimate_at_pilots(tx, pilots);
    for (const auto& e : est.entries) CHECK(std::abs(e.value - cd(1, 0)) <= 1e-12);
}

TEST_CASE("noiseless LS matches the perfect grid at pilot REs") {
    OfdmConfig cfg;
    PilotConfig pilots = make_pilot_config(cfg, 5);
    ComplexGrid tx = build_resource_grid(cfg, pilots, 6);
    Waveform wave = ofdm_modulate(tx, cfg);
    ChannelRealization ch = make_static_realization({cd(0.8, 0.3), cd(0.4, -0.25)},
                                                    {0, 7}, wave.samples.size(),
                                                    cfg.sample_rate_hz);
    ComplexGrid rx = ofdm_demodulate(apply_channel(wave, ch), cfg);
    ComplexGrid h = perfect_channel_grid(ch, cfg);

    SparseEstimate est = ls_estimate_at_pilots(rx, pilots);
    for (const auto& e : est.entries)
        CHECK(std::abs(e.value - h(e.subcarrier, e.symbol)) <= 1e-6);
}

TEST_CASE("LS rejects zero pilots") {
    OfdmConfig cfg;
    PilotConfig pilots = make_pilot_config(cfg, 5);
    pilots.pilot_values[3] = cd(0.0, 0.0);
    ComplexGrid rx = build_resource_grid(cfg, pilots, 4);
    CHECK_THROWS_AS(ls_estimate_at_pilots(rx, pilots), DivisionByZero);
}

TEST_CASE("interpolating a constant field reproduces it everywhere") {
    OfdmConfig cfg;
    const cd c(0.3, -1.2);
    auto est = lattice_estimate({2, 11}, {0, 2, 4, 6}, [&](int, int) { return c; });
    ComplexGrid grid = interpolate_grid(est, cfg);
    for (const cd& v : grid.data()) CHECK(std::abs(v - c) <= 1e-12);
}

TEST_CASE("bilinear interpolation is exact on a frequency ramp inside the hull") {
    OfdmConfig cfg;
    std::vector<int> subcarriers;
    for (int k = 0; k < cfg.num_subcarriers; k += 2) subcarriers.push_back(k);
    auto est = lattice_estimate({2, 11}, subcarriers, [](int k, int) {
        return cd(0.01 * k, -0.002 * k);
    });
    ComplexGrid grid = interpolate_grid(est, cfg);
    for (int k = 0; k <= subcarriers.back(); ++k) {
        const cd expected(0.01 * k, -0.002 * k);
        for (int m = 0; m < cfg.symbols_per_slot; ++m)
            CHECK(std::abs(grid(k, m) - expected) <= 1e-9 * (1.0 + std::abs(expected)));
    }
}

TEST_CASE("interpolant equals the sparse data at pilot REs") {
    OfdmConfig cfg;
    Rng rng(8);
    auto est = lattice_estimate({2, 7, 11}, {0, 2, 4, 8, 16, 610}, [&](int, int) {
        return rng.cnormal();
    });
    ComplexGrid grid = interpolate_grid(est, cfg);
    for (const auto& e : est.entries) CHECK(grid(e.subcarrier, e.symbol) == e.value);
}

TEST_CASE("interpolant respects the max/min principle per component") {
    OfdmConfig cfg;
    Rng rng(9);
    auto est = lattice_estimate({2, 11}, {0, 2, 4, 6, 8, 10}, [&](int, int) {
        return rng.cnormal();
    });
    double re_lo = 1e9, re_hi = -1e9, im_lo = 1e9, im_hi = -1e9;
    for (const auto& e : est.entries) {
        re_lo = std::min(re_lo, e.value.real());
        re_hi = std::max(re_hi, e.value.real());
        im_lo = std::min(im_lo, e.value.imag());
        im_hi = std::max(im_hi, e.value.imag());
    }
    ComplexGrid grid = interpolate_grid(est, cfg);
    const double tol = 1e-12;
    for (const cd& v : grid.data()) {
        CHECK(v.real() >= re_lo - tol);
        CHECK(v.real() <= re_hi + tol);
        CHECK(v.imag() >= im_lo - tol);
        CHECK(v.imag() <= im_hi + tol);
    }
}

TEST_CASE("interpolation preconditions") {
    OfdmConfig cfg;
    SparseEstimate empty;
    CHECK_THROWS_AS(interpolate_grid(empty, cfg), InvalidParameter);

    auto single_symbol = lattice_estimate({2}, {0, 2, 4}, [](int, int) {
        return cd(1, 0);
    });
    CHECK_THROWS_AS(interpolate_grid(single_symbol, cfg), InvalidParameter);
}

TEST_CASE("baseline is exact on a noiseless flat channel") {
    OfdmConfig cfg;
    PilotConfig pilots = make_pilot_config(cfg, 5);
    ComplexGrid tx = build_resource_grid(cfg, pilots, 10);
    Waveform wave = ofdm_modulate(tx, cfg);
    const cd h0(0.7, -0.6);
    ChannelRealization ch =
        make_static_realization({h0}, {0}, wave.samples.size(), cfg.sample_rate_hz);
    ComplexGrid rx = ofdm_demodulate(apply_channel(wave, ch), cfg);

    ComplexGrid baseline = pilot_baseline_estimate(rx, pilots, cfg);
    ComplexGrid h = perfect_channel_grid(ch, cfg);

    double acc = 0.0;
    for (std::size_t i = 0; i < baseline.size(); ++i)
        acc += std::norm(baseline.data()[i] - h.data()[i]);
    acc /= static_cast<double>(baseline.size());
    CHECK(acc <= 1e-12);
}

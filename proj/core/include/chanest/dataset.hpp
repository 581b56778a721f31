#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chanest/grid.hpp"
#include "chanest/ofdm.hpp"
#include "chanest/tdl.hpp"

namespace chanest {

/// Pilot layout parameters (the seeded QPSK values are regenerated from
/// these on demand).
struct PilotSpec {
    std::vector<int> symbol_indices = {2, 11};
    int subcarrier_stride = 2;
    int subcarrier_offset = 0;
    std::uint64_t seed = 0;
};

struct DatasetSpec {
    int num_examples = 256;
    std::vector<TdlProfileName> profiles = all_tdl_profiles();
    double delay_spread_ns_min = 1.0, delay_spread_ns_max = 300.0;
    double doppler_hz_min = 5.0, doppler_hz_max = 400.0;
    double snr_db_min = 0.0, snr_db_max = 10.0;
    OfdmConfig ofdm;
    PilotSpec pilots;
    std::uint64_t master_seed = 0;

    void validate() const;  // throws InvalidParameter
    PilotConfig make_pilots() const;
};

struct ExampleMeta {
    int index = 0;
    TdlProfileName profile = TdlProfileName::TdlA;
    double delay_spread_ns = 0.0;
    double doppler_hz = 0.0;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
    bool adversarial = false;  // in-memory flag set by fgsm_perturb
};

/// One training pair: the interpolated pilot-based estimate of the noisy
/// received grid (the network's prior input) and the perfect channel grid
/// (the regression target).
struct DatasetExample {
    ComplexGrid input;
    ComplexGrid target;
    ExampleMeta meta;
};

struct Dataset {
    std::vector<DatasetExample> examples;
    DatasetSpec spec;
    int format_version = 1;

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
};

/// Generates example `index` of the spec: draws channel parameters from the
/// per-example seed, runs TX grid -> channel -> AWGN -> demod -> LS +
/// interpolation, and computes the perfect channel target.
DatasetExample generate_example(const DatasetSpec& spec, int index, std::uint64_t seed);

/// Full dataset per spec; example i uses seed = master_seed ^ i. Examples
/// are generated in parallel and ordered by index.
Dataset generate_dataset(const DatasetSpec& spec);

/// Seeded shuffle, then split at floor(fraction * N): (train, val).
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed);

/// Directory layout: manifest.json (spec + per-example meta) and
/// examples.bin (input and target CGRD records per example, consecutive).
/// Files are staged with temp names and renamed on success.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace chanest

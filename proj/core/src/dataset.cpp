#include "chanest/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "chanest/channel.hpp"
#include "chanest/errors.hpp"
#include "chanest/parallel.hpp"
#include "chanest/pilot.hpp"
#include "chanest/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace chanest {

void DatasetSpec::validate() const {
    if (num_examples < 1) throw InvalidParameter("num_examples must be >= 1");
    if (profiles.empty()) throw InvalidParameter("profiles must be nonempty");
    if (delay_spread_ns_min <= 0.0 || delay_spread_ns_max < delay_spread_ns_min)
        throw InvalidParameter("invalid delay spread range");
    if (doppler_hz_min < 0.0 || doppler_hz_max < doppler_hz_min)
        throw InvalidParameter("invalid doppler range");
    if (snr_db_max < snr_db_min) throw InvalidParameter("invalid snr range");
    ofdm.validate();
}

PilotConfig DatasetSpec::make_pilots() const {
    return make_pilot_config(ofdm, pilots.seed, pilots.symbol_indices,
                             pilots.subcarrier_stride, pilots.subcarrier_offset);
}

DatasetExample generate_example(const DatasetSpec& spec, int index, std::uint64_t seed) {
    Rng param_rng(derive_seed(seed, 0));
    const std::uint64_t payload_seed = derive_seed(seed, 1);
    const std::uint64_t channel_seed = derive_seed(seed, 2);
    const std::uint64_t noise_seed = derive_seed(seed, 3);

    // Degenerate ranges pin the parameter exactly (this also admits the
    // snr = +inf noiseless setting).
    auto draw = [&](double lo, double hi) { return lo == hi ? lo : param_rng.uniform(lo, hi); };

    DatasetExample ex;
    ex.meta.index = index;
    ex.meta.seed = seed;
    ex.meta.profile = spec.profiles[param_rng.uniform_int(spec.profiles.size())];
    ex.meta.delay_spread_ns = draw(spec.delay_spread_ns_min, spec.delay_spread_ns_max);
    ex.meta.doppler_hz = draw(spec.doppler_hz_min, spec.doppler_hz_max);
    ex.meta.snr_db = draw(spec.snr_db_min, spec.snr_db_max);

    const PilotConfig pilots = spec.make_pilots();
    const ComplexGrid tx = build_resource_grid(spec.ofdm, pilots, payload_seed);
    const Waveform tx_wave = ofdm_modulate(tx, spec.ofdm);

    const TdlProfile profile = make_tdl_profile(ex.meta.profile);
    const ChannelRealization ch =
        realize_channel(profile, ex.meta.delay_spread_ns, ex.meta.doppler_hz,
                        tx_wave.samples.size(), spec.ofdm.sample_rate_hz, channel_seed);

    Waveform rx_wave = apply_channel(tx_wave, ch);
    rx_wave = add_awgn(rx_wave, ex.meta.snr_db, noise_seed);
    const ComplexGrid rx = ofdm_demodulate(rx_wave, spec.ofdm);

    ex.input = pilot_baseline_estimate(rx, pilots, spec.ofdm);
    ex.target = perfect_channel_grid(ch, spec.ofdm);
    return ex;
}

Dataset generate_dataset(const DatasetSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.spec = spec;
    ds.examples.resize(spec.num_examples);
    parallel_for(static_cast<std::size_t>(spec.num_examples), [&](std::size_t i) {
        const std::uint64_t seed = spec.master_seed ^ static_cast<std::uint64_t>(i);
        ds.examples[i] = generate_example(spec, static_cast<int>(i), seed);
    });
    return ds;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidParameter("split: fraction must be in (0, 1)");
    if (ds.size() < 2) throw InvalidParameter("split: need at least 2 examples");

    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x73706c6974ull));  // "split"
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::size_t j = rng.uniform_int(i + 1);
        std::swap(order[i], order[j]);
    }

    const std::size_t n_train =
        static_cast<std::size_t>(train_fraction * static_cast<double>(ds.size()));
    if (n_train == 0 || n_train == ds.size())
        throw InvalidParameter("split: degenerate partition");

    Dataset train, val;
    train.spec = ds.spec;
    val.spec = ds.spec;
    train.format_version = ds.format_version;
    val.format_version = ds.format_version;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        (i < n_train ? train : val).examples.push_back(ds.examples[order[i]]);
    }
    return {std::move(train), std::move(val)};
}

namespace {

json spec_to_json(const DatasetSpec& spec) {
    json j;
    j["num_examples"] = spec.num_examples;
    std::vector<std::string> profs;
    for (auto p : spec.profiles) profs.emplace_back(to_string(p));
    j["profiles"] = profs;
    j["delay_spread_ns"] = {spec.delay_spread_ns_min, spec.delay_spread_ns_max};
    j["doppler_hz"] = {spec.doppler_hz_min, spec.doppler_hz_max};
    j["snr_db"] = {spec.snr_db_min, spec.snr_db_max};
    j["master_seed"] = spec.master_seed;
    j["ofdm"] = {{"nfft", spec.ofdm.nfft},
                 {"sample_rate_hz", spec.ofdm.sample_rate_hz},
                 {"num_subcarriers", spec.ofdm.num_subcarriers},
                 {"symbols_per_slot", spec.ofdm.symbols_per_slot},
                 {"cp_lengths_samples", spec.ofdm.cp_lengths_samples},
                 {"windowing_samples", spec.ofdm.windowing_samples},
                 {"windowing_enabled", spec.ofdm.windowing_enabled},
                 {"slots_per_subframe", spec.ofdm.slots_per_subframe},
                 {"slots_per_frame", spec.ofdm.slots_per_frame}};
    j["pilots"] = {{"symbol_indices", spec.pilots.symbol_indices},
                   {"subcarrier_stride", spec.pilots.subcarrier_stride},
                   {"subcarrier_offset", spec.pilots.subcarrier_offset},
                   {"seed", spec.pilots.seed}};
    return j;
}

DatasetSpec spec_from_json(const json& j) {
    DatasetSpec spec;
    spec.num_examples = j.at("num_examples").get<int>();
    spec.profiles.clear();
    for (const auto& p : j.at("profiles"))
        spec.profiles.push_back(tdl_profile_from_string(p.get<std::string>()));
    spec.delay_spread_ns_min = j.at("delay_spread_ns").at(0).get<double>();
    spec.delay_spread_ns_max = j.at("delay_spread_ns").at(1).get<double>();
    spec.doppler_hz_min = j.at("doppler_hz").at(0).get<double>();
    spec.doppler_hz_max = j.at("doppler_hz").at(1).get<double>();
    spec.snr_db_min = j.at("snr_db").at(0).get<double>();
    spec.snr_db_max = j.at("snr_db").at(1).get<double>();
    spec.master_seed = j.at("master_seed").get<std::uint64_t>();
    const json& o = j.at("ofdm");
    spec.ofdm.nfft = o.at("nfft").get<int>();
    spec.ofdm.sample_rate_hz = o.at("sample_rate_hz").get<double>();
    spec.ofdm.num_subcarriers = o.at("num_subcarriers").get<int>();
    spec.ofdm.symbols_per_slot = o.at("symbols_per_slot").get<int>();
    spec.ofdm.cp_lengths_samples = o.at("cp_lengths_samples").get<std::vector<int>>();
    spec.ofdm.windowing_samples = o.at("windowing_samples").get<int>();
    spec.ofdm.windowing_enabled = o.at("windowing_enabled").get<bool>();
    spec.ofdm.slots_per_subframe = o.at("slots_per_subframe").get<int>();
    spec.ofdm.slots_per_frame = o.at("slots_per_frame").get<int>();
    const json& p = j.at("pilots");
    spec.pilots.symbol_indices = p.at("symbol_indices").get<std::vector<int>>();
    spec.pilots.subcarrier_stride = p.at("subcarrier_stride").get<int>();
    spec.pilots.subcarrier_offset = p.at("subcarrier_offset").get<int>();
    spec.pilots.seed = p.at("seed").get<std::uint64_t>();
    return spec;
}

void atomic_write(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError("cannot open for write: " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);

    json manifest;
    manifest["version"] = ds.format_version;
    manifest["spec"] = spec_to_json(ds.spec);
    json examples = json::array();
    for (const DatasetExample& ex : ds.examples) {
        examples.push_back({{"index", ex.meta.index},
                            {"profile", to_string(ex.meta.profile)},
                            {"delay_spread_ns", ex.meta.delay_spread_ns},
                            {"doppler_hz", ex.meta.doppler_hz},
                            {"snr_db", ex.meta.snr_db},
                            {"seed", ex.meta.seed}});
    }
    manifest["examples"] = std::move(examples);

    std::ostringstream bin;
    for (const DatasetExample& ex : ds.examples) {
        write_cgrd(bin, ex.input);
        write_cgrd(bin, ex.target);
    }

    // Stage both files, then rename, so a failure never leaves a mixed
    // old/new dataset behind.
    atomic_write(fs::path(dir) / "examples.bin", bin.str());
    atomic_write(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
    const fs::path mpath = fs::path(dir) / "manifest.json";
    const fs::path bpath = fs::path(dir) / "examples.bin";
    std::ifstream ms(mpath);
    if (!ms) throw IoError("cannot open " + mpath.string());

    json manifest;
    try {
        ms >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("manifest.json: " + std::string(e.what()));
    }

    Dataset ds;
    try {
        ds.format_version = manifest.at("version").get<int>();
        if (ds.format_version != 1)
            throw FormatError("unsupported dataset version " +
                              std::to_string(ds.format_version));
        ds.spec = spec_from_json(manifest.at("spec"));

        std::ifstream bs(bpath, std::ios::binary);
        if (!bs) throw IoError("cannot open " + bpath.string());
        for (const json& jm : manifest.at("examples")) {
            DatasetExample ex;
            ex.meta.index = jm.at("index").get<int>();
            ex.meta.profile = tdl_profile_from_string(jm.at("profile").get<std::string>());
            ex.meta.delay_spread_ns = jm.at("delay_spread_ns").get<double>();
            ex.meta.doppler_hz = jm.at("doppler_hz").get<double>();
            ex.meta.snr_db = jm.at("snr_db").get<double>();
            ex.meta.seed = jm.at("seed").get<std::uint64_t>();
            ex.input = read_cgrd(bs);
            ex.target = read_cgrd(bs);
            if (!ex.input.same_shape(ex.target))
                throw FormatError("dataset: input/target shape disagreement");
            ds.examples.push_back(std::move(ex));
        }
        // The binary must contain exactly the manifest's records.
        bs.peek();
        if (!bs.eof()) throw FormatError("examples.bin: trailing data");
    } catch (const json::exception& e) {
        throw FormatError("manifest.json: " + std::string(e.what()));
    }
    return ds;
}

}  // namespace chanest

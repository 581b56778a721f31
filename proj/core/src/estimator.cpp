#include "chanest/estimator.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "chanest/errors.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace chanest {

Tensor3f grid_to_tensor(const ComplexGrid& grid) {
    Tensor3f t(2, static_cast<int>(grid.rows()), static_cast<int>(grid.cols()));
    const auto& d = grid.data();
    const std::size_t plane = d.size();
    for (std::size_t i = 0; i < plane; ++i) {
        t.v[i] = static_cast<float>(d[i].real());
        t.v[plane + i] = static_cast<float>(d[i].imag());
    }
    return t;
}

ComplexGrid tensor_to_grid(const Tensor3f& t) {
    if (t.c != 2) throw ShapeMismatch("tensor_to_grid: expected 2 channels");
    ComplexGrid grid(t.h, t.w);
    const std::size_t plane = grid.size();
    for (std::size_t i = 0; i < plane; ++i)
        grid.data()[i] = cd(t.v[i], t.v[plane + i]);
    return grid;
}

double compute_norm_sigma(const Dataset& ds) {
    if (ds.empty()) throw InvalidParameter("compute_norm_sigma: empty dataset");
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const DatasetExample& ex : ds.examples) {
        for (const cd& v : ex.input.data()) {
            sum += v.real() + v.imag();
            sq += v.real() * v.real() + v.imag() * v.imag();
            n += 2;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    return std::sqrt(std::max(var, 1e-24));
}

std::vector<Sample> make_samples(const Dataset& ds, double norm_sigma) {
    const float inv = static_cast<float>(1.0 / norm_sigma);
    std::vector<Sample> samples;
    samples.reserve(ds.size());
    for (const DatasetExample& ex : ds.examples) {
        Sample s{grid_to_tensor(ex.input), grid_to_tensor(ex.target)};
        for (float& v : s.input.v) v *= inv;
        for (float& v : s.target.v) v *= inv;
        samples.push_back(std::move(s));
    }
    return samples;
}

Tensor3f ChannelEstimator::normalize(const ComplexGrid& grid) const {
    Tensor3f t = grid_to_tensor(grid);
    const float inv = static_cast<float>(1.0 / norm_sigma);
    for (float& v : t.v) v *= inv;
    return t;
}

ComplexGrid ChannelEstimator::denormalize(const Tensor3f& t) const {
    ComplexGrid grid = tensor_to_grid(t);
    for (cd& v : grid.data()) v *= norm_sigma;
    return grid;
}

ComplexGrid ChannelEstimator::estimate(const ComplexGrid& input) const {
    return denormalize(net.forward(normalize(input), /*dropout_active=*/false, 0));
}

ChannelEstimator make_estimator(const std::string& arch, const Dataset& train_set,
                                std::uint64_t seed) {
    if (train_set.empty()) throw InvalidParameter("make_estimator: empty dataset");
    const ComplexGrid& g = train_set.examples.front().input;
    ChannelEstimator est;
    est.arch = arch;
    est.init_seed = seed;
    est.norm_sigma = compute_norm_sigma(train_set);
    est.net = NeuralNet<float>::make(parse_arch(arch), 2, static_cast<int>(g.rows()),
                                     static_cast<int>(g.cols()), seed);
    if (est.net.out_channels() != 2)
        throw InvalidParameter("make_estimator: architecture must end with 2 channels");
    return est;
}

namespace {

json train_config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"early_stop_patience", c.early_stop_patience},
            {"seed", c.seed},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.early_stop_patience = j.at("early_stop_patience").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    return c;
}

constexpr char kMagic[4] = {'N', 'N', 'C', 'K'};

}  // namespace

void save_checkpoint(const std::string& path, const ChannelEstimator& est) {
    json header;
    header["version"] = 1;
    header["arch"] = est.arch;
    header["input_shape"] = {est.net.in_c, est.net.in_h, est.net.in_w};
    header["norm_sigma"] = est.norm_sigma;
    header["seed"] = est.init_seed;
    header["train"] = train_config_to_json(est.train_config);
    json sizes = json::array();
    for (const auto& l : est.net.layers) {
        if (l.kind != LayerKind::Conv2d) continue;
        sizes.push_back(l.weights.size());
        sizes.push_back(l.bias.size());
    }
    header["tensor_sizes"] = std::move(sizes);
    const std::string head = header.dump();

    const fs::path tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError("cannot open for write: " + tmp.string());
        os.write(kMagic, 4);
        const std::uint32_t len = static_cast<std::uint32_t>(head.size());
        unsigned char lb[4] = {static_cast<unsigned char>(len & 0xFF),
                               static_cast<unsigned char>((len >> 8) & 0xFF),
                               static_cast<unsigned char>((len >> 16) & 0xFF),
                               static_cast<unsigned char>((len >> 24) & 0xFF)};
        os.write(reinterpret_cast<const char*>(lb), 4);
        os.write(head.data(), static_cast<std::streamsize>(head.size()));
        for (const auto& l : est.net.layers) {
            if (l.kind != LayerKind::Conv2d) continue;
            os.write(reinterpret_cast<const char*>(l.weights.data()),
                     static_cast<std::streamsize>(l.weights.size() * sizeof(float)));
            os.write(reinterpret_cast<const char*>(l.bias.data()),
                     static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
        }
        if (!os) throw IoError("checkpoint write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

ChannelEstimator load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic");
    unsigned char lb[4];
    is.read(reinterpret_cast<char*>(lb), 4);
    if (!is) throw FormatError("checkpoint: truncated header length");
    const std::uint32_t len = static_cast<std::uint32_t>(lb[0]) |
                              (static_cast<std::uint32_t>(lb[1]) << 8) |
                              (static_cast<std::uint32_t>(lb[2]) << 16) |
                              (static_cast<std::uint32_t>(lb[3]) << 24);
    std::string head(len, '\0');
    is.read(head.data(), len);
    if (!is) throw FormatError("checkpoint: truncated header");

    ChannelEstimator est;
    std::vector<std::size_t> sizes;
    try {
        const json header = json::parse(head);
        if (header.at("version").get<int>() != 1)
            throw FormatError("checkpoint: unsupported version");
        est.arch = header.at("arch").get<std::string>();
        est.norm_sigma = header.at("norm_sigma").get<double>();
        est.init_seed = header.at("seed").get<std::uint64_t>();
        est.train_config = train_config_from_json(header.at("train"));
        const auto shape = header.at("input_shape").get<std::vector<int>>();
        if (shape.size() != 3) throw FormatError("checkpoint: bad input_shape");
        est.net = NeuralNet<float>::make(parse_arch(est.arch), shape[0], shape[1],
                                         shape[2], /*seed=*/0);
        sizes = header.at("tensor_sizes").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw FormatError("checkpoint header: " + std::string(e.what()));
    }

    std::size_t si = 0;
    for (auto& l : est.net.layers) {
        if (l.kind != LayerKind::Conv2d) continue;
        if (si + 2 > sizes.size() || sizes[si] != l.weights.size() ||
            sizes[si + 1] != l.bias.size())
            throw FormatError("checkpoint: tensor sizes do not match architecture");
        si += 2;
        is.read(reinterpret_cast<char*>(l.weights.data()),
                static_cast<std::streamsize>(l.weights.size() * sizeof(float)));
        is.read(reinterpret_cast<char*>(l.bias.data()),
                static_cast<std::streamsize>(l.bias.size() * sizeof(float)));
        if (!is) throw FormatError("checkpoint: truncated tensors");
    }
    is.peek();
    if (!is.eof()) throw FormatError("checkpoint: trailing data");
    return est;
}

}  // namespace chanest

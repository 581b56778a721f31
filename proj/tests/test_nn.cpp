#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chanest/errors.hpp"
#include "chanest/estimator.hpp"
#include "chanest/nn.hpp"
#include "chanest/train.hpp"
#include "gradcheck_util.hpp"
#include "test_util.hpp"

using namespace chanest;
using namespace chanest::test;

TEST_CASE("arch strings parse and roundtrip") {
    auto spec = parse_arch(kDefaultArch);
    CHECK(arch_to_string(spec) == kDefaultArch);
    CHECK(spec.front().kind == LayerKind::Conv2d);
    CHECK(spec.front().kh == 9);

    CHECK_THROWS_AS(parse_arch("conv:4x4x8"), InvalidParameter);  // even kernel
    CHECK_THROWS_AS(parse_arch("dropout:1.0"), InvalidParameter);
    CHECK_THROWS_AS(parse_arch("pool:2"), InvalidParameter);
    CHECK_THROWS_AS(parse_arch(""), InvalidParameter);
}

TEST_CASE("forward is deterministic with dropout off") {
    auto net = NeuralNetF::make(parse_arch("conv:3x3x4,relu,conv:3x3x2"), 2, 8, 6, 3);
    Tensor3f x = random_tensor(2, 8, 6, 5).cast<float>();
    Tensor3f a = net.forward(x, false, 1);
    Tensor3f b = net.forward(x, false, 2);
    CHECK(a.v == b.v);
}

TEST_CASE("rate-0 dropout is the identity even when active") {
    auto net = NeuralNetF::make(parse_arch("conv:3x3x4,relu,dropout:0,conv:1x1x2"),
                                2, 8, 6, 3);
    Tensor3f x = random_tensor(2, 8, 6, 7).cast<float>();
    CHECK(net.forward(x, true, 11).v == net.forward(x, false, 0).v);
}

TEST_CASE("dropout masks are a pure function of the seed") {
    auto net = NeuralNetF::make(parse_arch("conv:3x3x4,relu,dropout:0.4,conv:1x1x2"),
                                2, 8, 6, 3);
    Tensor3f x = random_tensor(2, 8, 6, 9).cast<float>();
    CHECK(net.forward(x, true, 42).v == net.forward(x, true, 42).v);
    CHECK(net.forward(x, true, 42).v != net.forward(x, true, 43).v);
}

TEST_CASE("forward rejects shape mismatches") {
    auto net = NeuralNetF::make(parse_arch("conv:3x3x2"), 2, 8, 6, 3);
    Tensor3f bad(2, 8, 5);
    CHECK_THROWS_AS(net.forward(bad, false, 0), ShapeMismatch);
}

TEST_CASE("inverted dropout preserves the expectation") {
    auto net = NeuralNetF::make(parse_arch("dropout:0.3"), 1, 10, 10, 1);
    Tensor3f x(1, 10, 10);
    for (auto& v : x.v) v = 1.0f;

    const int trials = 100000;
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        Tensor3f y = net.forward(x, true, 1000 + t);
        for (float v : y.v) acc += v;
    }
    const double mean = acc / (static_cast<double>(trials) * x.numel());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("gradient at the loss minimum is zero") {
    auto net = NeuralNetD::make(parse_arch("conv:3x3x3,relu,conv:1x1x2"), 2, 6, 5, 8);
    Tensor3d x = random_tensor(2, 6, 5, 21);
    Tensor3d target = net.forward(x, false, 0);
    BackwardResult<double> back = net.backward(x, target, false, 0);
    CHECK(back.loss <= 1e-12);
    for (const auto& layer : back.weight_grads)
        for (double g : layer) CHECK(std::abs(g) <= 1e-12);
    for (const auto& layer : back.bias_grads)
        for (double g : layer) CHECK(std::abs(g) <= 1e-12);
    for (double g : back.input_grad.v) CHECK(std::abs(g) <= 1e-12);
}

TEST_CASE("1x1 conv gradient matches the hand-derived formula") {
    // Single weight w, no bias contribution checked: loss = mean (w x - t)^2,
    // dL/dw = 2 mean((w x - t) x).
    auto net = NeuralNetD::make(parse_arch("conv:1x1x1"), 1, 4, 3, 2);
    net.layers[0].weights[0] = 0.8;
    net.layers[0].bias[0] = 0.0;
    Tensor3d x = random_tensor(1, 4, 3, 31);
    Tensor3d t = random_tensor(1, 4, 3, 32);

    BackwardResult<double> back = net.backward(x, t, false, 0);
    double expected = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i)
        expected += 2.0 * (0.8 * x.v[i] - t.v[i]) * x.v[i];
    expected /= static_cast<double>(x.numel());
    CHECK(back.weight_grads[0][0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("finite differences confirm conv gradients") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto net = NeuralNetD::make(parse_arch("conv:3x3x3"), 2, 6, 5, 100 + seed);
        Tensor3d x = random_tensor(2, 6, 5, 200 + seed);
        Tensor3d t = random_tensor(3, 6, 5, 300 + seed);
        auto res = gradcheck(net, x, t, false, 0);
        INFO("seed ", seed, " worst ", res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("finite differences confirm relu gradients") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto net = NeuralNetD::make(parse_arch("conv:1x1x2,relu"), 2, 5, 4, 400 + seed);
        Tensor3d x = random_tensor(2, 5, 4, 500 + seed);
        Tensor3d t = random_tensor(2, 5, 4, 600 + seed);
        auto res = gradcheck(net, x, t, false, 0);
        INFO("seed ", seed, " worst ", res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("finite differences confirm dropout gradients under a frozen mask") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto net =
            NeuralNetD::make(parse_arch("conv:3x3x2,dropout:0.35"), 1, 5, 4, 700 + seed);
        Tensor3d x = random_tensor(1, 5, 4, 800 + seed);
        Tensor3d t = random_tensor(2, 5, 4, 900 + seed);
        auto res = gradcheck(net, x, t, true, 77 + seed);
        INFO("seed ", seed, " worst ", res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("finite differences confirm the full stack") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto net = NeuralNetD::make(
            parse_arch("conv:3x3x3,relu,dropout:0.2,conv:3x1x2"), 2, 6, 4, 1000 + seed);
        Tensor3d x = random_tensor(2, 6, 4, 1100 + seed);
        Tensor3d t = random_tensor(2, 6, 4, 1200 + seed);
        auto res = gradcheck(net, x, t, true, 5 + seed);
        INFO("seed ", seed, " worst ", res.worst);
        CHECK(res.max_rel_err < 1e-4);
    }
}

TEST_CASE("backward rejects target shape mismatches") {
    auto net = NeuralNetD::make(parse_arch("conv:3x3x2"), 2, 6, 5, 1);
    Tensor3d x = random_tensor(2, 6, 5, 1);
    Tensor3d bad = random_tensor(2, 6, 4, 2);
    CHECK_THROWS_AS(net.backward(x, bad, false, 0), ShapeMismatch);
}

TEST_CASE("training fits y = 0.5 x with a 1x1 conv") {
    auto net = NeuralNetF::make(parse_arch("conv:1x1x1"), 1, 8, 8, 5);
    net.layers[0].weights[0] = 0.0f;

    std::vector<Sample> samples;
    Rng rng(123);
    for (int i = 0; i < 64; ++i) {
        Sample s{Tensor3f(1, 8, 8), Tensor3f(1, 8, 8)};
        for (std::size_t p = 0; p < s.input.numel(); ++p) {
            s.input.v[p] = static_cast<float>(rng.uniform(-1.0, 1.0));
            s.target.v[p] = 0.5f * s.input.v[p];
        }
        samples.push_back(std::move(s));
    }
    std::vector<Sample> val(samples.begin(), samples.begin() + 8);

    TrainConfig cfg;
    cfg.learning_rate = 0.001;
    cfg.batch_size = 8;
    cfg.max_epochs = 200;
    cfg.early_stop_patience = 200;  // run the full budget
    cfg.seed = 9;
    TrainReport report = train_network(net, samples, val, cfg);

    CHECK(report.train_loss.back() < 1e-6);
    CHECK(net.layers[0].weights[0] == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("patience 0 stops at the first non-improving epoch") {
    auto net = NeuralNetF::make(parse_arch("conv:1x1x1"), 1, 4, 4, 5);
    std::vector<Sample> samples;
    Rng rng(5);
    for (int i = 0; i < 8; ++i) {
        Sample s{Tensor3f(1, 4, 4), Tensor3f(1, 4, 4)};
        for (std::size_t p = 0; p < s.input.numel(); ++p) {
            s.input.v[p] = static_cast<float>(rng.uniform(-1.0, 1.0));
            s.target.v[p] = s.input.v[p];  // already solvable
        }
        samples.push_back(std::move(s));
    }
    // Identity task with w starting at the solution: epoch 1 cannot improve
    // the (already minimal) validation loss, so training stops immediately.
    net.layers[0].weights[0] = 1.0f;
    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.max_epochs = 50;
    cfg.early_stop_patience = 0;
    cfg.seed = 1;
    TrainReport report = train_network(net, samples, samples, cfg);
    CHECK(report.stopped_epoch == 1);
    CHECK(report.best_epoch == 0);
}

TEST_CASE("training is deterministic given the seed") {
    auto make_net = [] {
        return NeuralNetF::make(parse_arch("conv:3x3x2,relu,dropout:0.2,conv:1x1x1"),
                                1, 6, 6, 77);
    };
    std::vector<Sample> samples;
    Rng rng(31);
    for (int i = 0; i < 12; ++i) {
        Sample s{Tensor3f(1, 6, 6), Tensor3f(1, 6, 6)};
        for (std::size_t p = 0; p < s.input.numel(); ++p) {
            s.input.v[p] = static_cast<float>(rng.normal());
            s.target.v[p] = 0.3f * s.input.v[p];
        }
        samples.push_back(std::move(s));
    }
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.max_epochs = 5;
    cfg.early_stop_patience = 5;
    cfg.seed = 13;

    auto net1 = make_net();
    auto net2 = make_net();
    TrainReport r1 = train_network(net1, samples, samples, cfg);
    TrainReport r2 = train_network(net2, samples, samples, cfg);
    CHECK(r1.train_loss == r2.train_loss);
    CHECK(r1.val_loss == r2.val_loss);
    for (std::size_t li = 0; li < net1.layers.size(); ++li) {
        CHECK(net1.layers[li].weights == net2.layers[li].weights);
        CHECK(net1.layers[li].bias == net2.layers[li].bias);
    }
}

TEST_CASE("train validates inputs") {
    auto net = NeuralNetF::make(parse_arch("conv:1x1x1"), 1, 4, 4, 5);
    std::vector<Sample> empty;
    std::vector<Sample> one{Sample{Tensor3f(1, 4, 4), Tensor3f(1, 4, 4)}};
    TrainConfig cfg;
    CHECK_THROWS_AS(train_network(net, empty, one, cfg), InvalidParameter);
    CHECK_THROWS_AS(train_network(net, one, empty, cfg), InvalidParameter);
    TrainConfig bad;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train_network(net, one, one, bad), InvalidParameter);
}

TEST_CASE("checkpoints roundtrip bit-exactly") {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.examples.resize(3);
    for (int i = 0; i < 3; ++i) {
        ds.examples[i].input = random_grid(6, 4, 50 + i);
        ds.examples[i].target = random_grid(6, 4, 60 + i);
    }
    ChannelEstimator est = make_estimator("conv:3x3x4,relu,dropout:0.1,conv:1x1x2",
                                          ds, 99);
    est.train_config.max_epochs = 42;

    const std::string path = (fs::temp_directory_path() / "chanest_ckpt_test.nnck").string();
    save_checkpoint(path, est);
    ChannelEstimator back = load_checkpoint(path);

    CHECK(back.arch == est.arch);
    CHECK(back.norm_sigma == est.norm_sigma);
    CHECK(back.init_seed == est.init_seed);
    CHECK(back.train_config.max_epochs == 42);
    REQUIRE(back.net.layers.size() == est.net.layers.size());
    for (std::size_t li = 0; li < est.net.layers.size(); ++li) {
        CHECK(back.net.layers[li].weights == est.net.layers[li].weights);
        CHECK(back.net.layers[li].bias == est.net.layers[li].bias);
    }

    // Stored bytes are a pure function of the estimator.
    const std::string path2 = (fs::temp_directory_path() / "chanest_ckpt_test2.nnck").string();
    save_checkpoint(path2, est);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    fs::remove(path);
    fs::remove(path2);
}

TEST_CASE("corrupt checkpoints are rejected") {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.examples.resize(1);
    ds.examples[0].input = random_grid(6, 4, 70);
    ds.examples[0].target = random_grid(6, 4, 71);
    ChannelEstimator est = make_estimator("conv:1x1x2", ds, 1);

    const std::string path = (fs::temp_directory_path() / "chanest_ckpt_bad.nnck").string();
    save_checkpoint(path, est);

    std::string bytes;
    {
        std::ifstream f(path, std::ios::binary);
        bytes.assign((std::istreambuf_iterator<char>(f)), {});
    }
    {
        std::ofstream f(path, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);

    bytes[0] = 'Z';
    {
        std::ofstream f(path, std::ios::binary);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
    fs::remove(path);
}

TEST_CASE("grid/tensor conversion preserves values and shape") {
    ComplexGrid g = random_grid(5, 3, 81);
    Tensor3f t = grid_to_tensor(g);
    CHECK(t.c == 2);
    CHECK(t.h == 5);
    CHECK(t.w == 3);
    ComplexGrid back = tensor_to_grid(t);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(back.data()[i].real() == static_cast<float>(g.data()[i].real()));
        CHECK(back.data()[i].imag() == static_cast<float>(g.data()[i].imag()));
    }
}

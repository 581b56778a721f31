#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "chanest/errors.hpp"
#include "chanest/nn.hpp"
#include "chanest/uncertainty.hpp"
#include "gradcheck_util.hpp"

using namespace chanest;
using namespace chanest::test;

TEST_CASE("sample_variance oracles") {
    std::vector<double> v{1.0, 2.0, 3.0};
    CHECK(sample_variance(v) == 1.0);

    std::vector<double> constant{0.1, 0.1, 0.1, 0.1, 0.1};
    CHECK(sample_variance(constant) == 0.0);  // exactly

    std::vector<double> one{5.0};
    CHECK_THROWS_AS(sample_variance(one), InsufficientSamples);
}

TEST_CASE("inverse normal cdf hits textbook quantiles") {
    const double z975 = inverse_normal_cdf(0.975);
    CHECK(z975 >= 1.9599);
    CHECK(z975 <= 1.9600);
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(inverse_normal_cdf(0.9) == doctest::Approx(1.2815515655446004).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.99) == doctest::Approx(2.3263478740408408).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.999) == doctest::Approx(3.090232306167813).epsilon(1e-9));
    CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-z975).epsilon(1e-9));
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), InvalidParameter);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), InvalidParameter);
}

TEST_CASE("confidence interval basics") {
    std::vector<double> constant{2.5, 2.5, 2.5};
    auto [lo, hi] = confidence_interval(constant, 0.05);
    CHECK(lo == 2.5);
    CHECK(hi == 2.5);

    std::vector<double> v{1.0, 2.0, 3.0};
    auto [l2, h2] = confidence_interval(v, 0.05);
    const double z = inverse_normal_cdf(0.975);
    CHECK(l2 == doctest::Approx(2.0 - z / std::sqrt(3.0)).epsilon(1e-12));
    CHECK(h2 == doctest::Approx(2.0 + z / std::sqrt(3.0)).epsilon(1e-12));

    CHECK_THROWS_AS(confidence_interval(v, 0.0), InvalidParameter);
    CHECK_THROWS_AS(confidence_interval(v, 1.5), InvalidParameter);
    std::vector<double> one{1.0};
    CHECK_THROWS_AS(confidence_interval(one, 0.05), InsufficientSamples);
}

TEST_CASE("quadrupling T halves the CI half-width") {
    const double s = 0.37;
    CHECK(ci_halfwidth(s, 32, 0.05) ==
          doctest::Approx(0.5 * ci_halfwidth(s, 8, 0.05)).epsilon(1e-12));
}

TEST_CASE("predictive entropy oracles") {
    std::vector<double> onehot{0.0, 1.0, 0.0};
    CHECK(predictive_entropy(onehot) == 0.0);

    std::vector<double> uniform4(4, 0.25);
    CHECK(predictive_entropy(uniform4) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    std::vector<double> mixed{0.5, 0.25, 0.25};
    CHECK(predictive_entropy(mixed) ==
          doctest::Approx(1.5 * std::log(2.0)).epsilon(1e-12));

    std::vector<double> negative{0.6, 0.6, -0.2};
    CHECK_THROWS_AS(predictive_entropy(negative), InvalidDistribution);
    std::vector<double> short_sum{0.5, 0.25};
    CHECK_THROWS_AS(predictive_entropy(short_sum), InvalidDistribution);
}

TEST_CASE("entropy is bounded by [0, ln C]") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const int c = 2 + static_cast<int>(rng.uniform_int(6));
        std::vector<double> p(c);
        double sum = 0.0;
        for (double& v : p) {
            v = rng.uniform_pos();
            sum += v;
        }
        for (double& v : p) v /= sum;
        // Renormalize exactly enough for the 1e-9 gate.
        double h = predictive_entropy(p);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(c)) + 1e-12);
    }
}

namespace {

NeuralNetF make_dropout_net(double rate, int h = 4, int w = 3) {
    auto net = NeuralNetF::make(
        parse_arch("conv:3x3x4,relu,dropout:" + std::to_string(rate) + ",conv:1x1x1"),
        1, h, w, 11);
    return net;
}

}  // namespace

TEST_CASE("mc_predict: T = 1 gives the single pass with zero variance flag") {
    auto net = make_dropout_net(0.3);
    Tensor3f x = random_tensor(1, 4, 3, 2).cast<float>();
    McConfig cfg{.num_passes = 1, .base_seed = 5};
    McPrediction pred = mc_predict(net, x, cfg);
    REQUIRE(pred.samples.size() == 1);
    CHECK_FALSE(pred.variance_defined);
    for (std::size_t i = 0; i < pred.mean.numel(); ++i) {
        CHECK(pred.mean.v[i] == static_cast<double>(pred.samples[0].v[i]));
        CHECK(pred.variance.v[i] == 0.0);
    }
    CHECK_THROWS_AS(summarize(pred, 0.05), InsufficientSamples);
}

TEST_CASE("mc_predict: zero dropout rates give identical samples, variance exactly 0") {
    auto net = make_dropout_net(0.0);
    Tensor3f x = random_tensor(1, 4, 3, 3).cast<float>();
    McConfig cfg{.num_passes = 8, .base_seed = 6};
    McPrediction pred = mc_predict(net, x, cfg);
    for (const auto& s : pred.samples) CHECK(s.v == pred.samples[0].v);
    for (double v : pred.variance.v) CHECK(v == 0.0);
}

TEST_CASE("mc_predict mean equals the recomputed arithmetic mean") {
    auto net = make_dropout_net(0.25);
    Tensor3f x = random_tensor(1, 4, 3, 4).cast<float>();
    McConfig cfg{.num_passes = 16, .base_seed = 7};
    McPrediction pred = mc_predict(net, x, cfg);

    for (std::size_t p = 0; p < pred.mean.numel(); ++p) {
        double acc = 0.0;
        for (const auto& s : pred.samples) acc += static_cast<double>(s.v[p]);
        CHECK(pred.mean.v[p] == doctest::Approx(acc / 16.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mc_predict(net, x, McConfig{.num_passes = 0}), InvalidParameter);
}

TEST_CASE("mc_predict is deterministic in the base seed") {
    auto net = make_dropout_net(0.25);
    Tensor3f x = random_tensor(1, 4, 3, 5).cast<float>();
    McConfig cfg{.num_passes = 5, .base_seed = 11};
    McPrediction a = mc_predict(net, x, cfg);
    McPrediction b = mc_predict(net, x, cfg);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        CHECK(a.samples[i].v == b.samples[i].v);
}

TEST_CASE("summarize: zero variance lands on the entropy floor") {
    auto net = make_dropout_net(0.0);
    Tensor3f x = random_tensor(1, 4, 3, 6).cast<float>();
    McPrediction pred = mc_predict(net, x, McConfig{.num_passes = 4, .base_seed = 1});
    UncertaintySummary s = summarize(pred, 0.05);
    CHECK(s.scalar_variance == 0.0);
    CHECK(s.scalar_entropy ==
          doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E * 1e-12)).epsilon(1e-12));
    for (double hw : s.ci_halfwidth.v) CHECK(hw == 0.0);
}

TEST_CASE("summarize: scalar variance equals the brute-force mean") {
    auto net = make_dropout_net(0.3);
    Tensor3f x = random_tensor(1, 4, 3, 7).cast<float>();
    McPrediction pred = mc_predict(net, x, McConfig{.num_passes = 12, .base_seed = 3});
    UncertaintySummary s = summarize(pred, 0.05);

    double acc = 0.0;
    for (double v : pred.variance.v) acc += v;
    CHECK(s.scalar_variance ==
          doctest::Approx(acc / static_cast<double>(pred.variance.numel()))
              .epsilon(1e-12));

    const double z = inverse_normal_cdf(0.975);
    CHECK(s.ci_halfwidth.v[0] ==
          doctest::Approx(z * std::sqrt(pred.variance.v[0]) / std::sqrt(12.0))
              .epsilon(1e-12));
}

TEST_CASE("scaling all variances by 4 raises the entropy by ln 2") {
    auto net = make_dropout_net(0.3);
    Tensor3f x = random_tensor(1, 4, 3, 8).cast<float>();
    McPrediction pred = mc_predict(net, x, McConfig{.num_passes = 12, .base_seed = 9});

    McPrediction scaled = pred;
    for (auto& s : scaled.samples)
        for (float& v : s.v) v *= 2.0f;
    for (double& v : scaled.mean.v) v *= 2.0;
    for (double& v : scaled.variance.v) v *= 4.0;

    // Variances here are ~1e-2 to 1e0, so the 1e-12 floor is negligible.
    const double h0 = summarize(pred, 0.05).scalar_entropy;
    const double h1 = summarize(scaled, 0.05).scalar_entropy;
    CHECK(h1 - h0 == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("variance of the MC mean decays like 1/T") {
    auto net = make_dropout_net(0.3);
    Tensor3f x = random_tensor(1, 4, 3, 10).cast<float>();

    const std::vector<int> ts{4, 16, 64};
    const int runs = 64;
    std::vector<double> log_t, log_v;
    for (int t : ts) {
        // Variance across runs of the element-0 mean, averaged over elements.
        std::vector<std::vector<double>> means(runs);
        for (int r = 0; r < runs; ++r) {
            McConfig cfg{.num_passes = t,
                         .base_seed = derive_seed(999, static_cast<std::uint64_t>(r))};
            means[r] = mc_predict(net, x, cfg).mean.v;
        }
        const std::size_t n = means[0].size();
        double acc = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            std::vector<double> vals(runs);
            for (int r = 0; r < runs; ++r) vals[r] = means[r][p];
            acc += sample_variance(vals);
        }
        log_t.push_back(std::log(static_cast<double>(t)));
        log_v.push_back(std::log(acc / static_cast<double>(n)));
    }

    // Least-squares slope of log variance vs log T.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < log_t.size(); ++i) {
        mx += log_t[i];
        my += log_v[i];
    }
    mx /= 3.0;
    my /= 3.0;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_t.size(); ++i) {
        sxx += (log_t[i] - mx) * (log_t[i] - mx);
        sxy += (log_t[i] - mx) * (log_v[i] - my);
    }
    const double slope = sxy / sxx;
    CHECK(std::abs(slope - (-1.0)) <= 0.2);
}

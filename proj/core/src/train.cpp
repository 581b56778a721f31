#include "chanest/train.hpp"

#include <chrono>
#include <cmath>

#include "chanest/errors.hpp"
#include "chanest/parallel.hpp"
#include "chanest/rng.hpp"

namespace chanest {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw InvalidParameter("learning_rate must be positive");
    if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
    if (max_epochs < 1) throw InvalidParameter("max_epochs must be >= 1");
    if (early_stop_patience < 0) throw InvalidParameter("patience must be >= 0");
}

double validation_loss(const NeuralNet<float>& net, std::span<const Sample> samples) {
    if (samples.empty()) throw InvalidParameter("validation_loss: empty sample set");
    std::vector<double> losses(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        Tensor3f out = net.forward(samples[i].input, /*dropout_active=*/false, 0);
        losses[i] = mse_loss(out, samples[i].target);
    });
    double acc = 0.0;
    for (double l : losses) acc += l;
    return acc / static_cast<double>(samples.size());
}

namespace {

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    std::int64_t step = 0;

    explicit AdamState(const NeuralNet<float>& net) {
        m_w.resize(net.layers.size());
        v_w.resize(net.layers.size());
        m_b.resize(net.layers.size());
        v_b.resize(net.layers.size());
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            m_w[i].assign(net.layers[i].weights.size(), 0.0);
            v_w[i].assign(net.layers[i].weights.size(), 0.0);
            m_b[i].assign(net.layers[i].bias.size(), 0.0);
            v_b[i].assign(net.layers[i].bias.size(), 0.0);
        }
    }
};

void adam_update(std::vector<float>& param, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, const TrainConfig& cfg,
                 double bc1, double bc2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= static_cast<float>(cfg.learning_rate * mhat /
                                       (std::sqrt(vhat) + cfg.adam_eps));
    }
}

}  // namespace

TrainReport train_network(NeuralNet<float>& net, std::span<const Sample> train_set,
                          std::span<const Sample> val_set, const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty() || val_set.empty())
        throw InvalidParameter("train: empty dataset");
    for (const Sample& s : train_set)
        if (s.input.c != net.in_c || s.input.h != net.in_h || s.input.w != net.in_w)
            throw ShapeMismatch("train: sample shape does not match network");

    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;

    AdamState adam(net);
    Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566666c65ull));  // "shuffle"
    const std::uint64_t dropout_root = derive_seed(cfg.seed, 0x64726f70ull);  // "drop"

    report.initial_val_loss = validation_loss(net, val_set);
    double best_val = report.initial_val_loss;
    NeuralNet<float> best_net = net;
    int best_epoch = 0;
    int epochs_since_best = 0;

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const std::size_t n = train_set.size();
    std::uint64_t sample_counter = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // Fisher-Yates from the seeded stream; order is part of the contract.
        for (std::size_t i = n - 1; i > 0; --i) {
            std::size_t j = shuffle_rng.uniform_int(i + 1);
            std::swap(order[i], order[j]);
        }

        double epoch_loss_acc = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t b = std::min<std::size_t>(cfg.batch_size, n - start);

            // Per-example gradients into index-addressed slots so that the
            // reduction order (and hence the result) does not depend on the
            // thread count.
            std::vector<BackwardResult<float>> grads(b);
            const std::uint64_t batch_counter = sample_counter;
            parallel_for(b, [&](std::size_t slot) {
                const Sample& s = train_set[order[start + slot]];
                grads[slot] = net.backward(s.input, s.target, /*dropout_active=*/true,
                                           derive_seed(dropout_root, batch_counter + slot));
            });
            sample_counter += b;

            adam.step += 1;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, adam.step);
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, adam.step);
            const double inv_b = 1.0 / static_cast<double>(b);

            for (std::size_t li = 0; li < net.layers.size(); ++li) {
                if (net.layers[li].kind != LayerKind::Conv2d) continue;
                std::vector<double> gw(net.layers[li].weights.size(), 0.0);
                std::vector<double> gb(net.layers[li].bias.size(), 0.0);
                for (std::size_t slot = 0; slot < b; ++slot) {
                    const auto& wg = grads[slot].weight_grads[li];
                    for (std::size_t p = 0; p < gw.size(); ++p) gw[p] += wg[p];
                    const auto& bg = grads[slot].bias_grads[li];
                    for (std::size_t p = 0; p < gb.size(); ++p) gb[p] += bg[p];
                }
                for (double& g : gw) g *= inv_b;
                for (double& g : gb) g *= inv_b;
                adam_update(net.layers[li].weights, gw, adam.m_w[li], adam.v_w[li], cfg,
                            bc1, bc2);
                adam_update(net.layers[li].bias, gb, adam.m_b[li], adam.v_b[li], cfg,
                            bc1, bc2);
            }

            for (std::size_t slot = 0; slot < b; ++slot)
                epoch_loss_acc += grads[slot].loss;
        }

        report.train_loss.push_back(epoch_loss_acc / static_cast<double>(n));
        const double val = validation_loss(net, val_set);
        report.val_loss.push_back(val);
        report.stopped_epoch = epoch;

        if (val < best_val) {
            best_val = val;
            best_net = net;
            best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best > cfg.early_stop_patience) break;
        }
    }

    net = std::move(best_net);
    report.best_epoch = best_epoch;
    report.best_val_loss = best_val;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace chanest

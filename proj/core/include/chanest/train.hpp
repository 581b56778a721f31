#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chanest/nn.hpp"
#include "chanest/tensor.hpp"

namespace chanest {

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 64;
    int max_epochs = 100;
    int early_stop_patience = 5;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;  // throws InvalidParameter
};

struct TrainReport {
    std::vector<double> train_loss;  // per epoch, 1-based epochs
    std::vector<double> val_loss;
    double initial_val_loss = 0.0;  // before any update (epoch 0)
    int stopped_epoch = 0;
    int best_epoch = 0;  // 0 = initial weights were never beaten
    double best_val_loss = 0.0;
    double wall_seconds = 0.0;
};

/// One normalized training pair.
struct Sample {
    Tensor3f input;
    Tensor3f target;
};

/// Minibatch Adam on MSE with dropout active; early-stops after `patience`
/// epochs without validation improvement and restores the weights of the
/// best validation epoch (the initial weights count as epoch 0, so the
/// returned net is never worse on the validation set than the input net).
/// Deterministic given the config seed, independent of thread count.
TrainReport train_network(NeuralNet<float>& net, std::span<const Sample> train_set,
                          std::span<const Sample> val_set, const TrainConfig& cfg);

/// Mean dropout-off MSE of the net over a sample set (normalized units).
double validation_loss(const NeuralNet<float>& net, std::span<const Sample> samples);

}  // namespace chanest

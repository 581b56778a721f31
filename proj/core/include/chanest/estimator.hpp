#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chanest/dataset.hpp"
#include "chanest/grid.hpp"
#include "chanest/nn.hpp"
#include "chanest/train.hpp"

namespace chanest {

/// (2, rows, cols) tensor with real/imag planes.
Tensor3f grid_to_tensor(const ComplexGrid& grid);
ComplexGrid tensor_to_grid(const Tensor3f& t);

/// Population std of all real/imag values of the inputs (floored away from
/// zero). Both inputs and targets are scaled by 1/sigma before training.
double compute_norm_sigma(const Dataset& ds);

/// Normalized (input, target) tensor pairs for the trainer.
std::vector<Sample> make_samples(const Dataset& ds, double norm_sigma);

/// The deep channel estimator: a dropout CNN plus the input normalization
/// it was trained with.
struct ChannelEstimator {
    NeuralNet<float> net;
    double norm_sigma = 1.0;
    std::string arch;
    std::uint64_t init_seed = 0;
    TrainConfig train_config;

    /// Dropout-off prediction, denormalized back to grid units.
    ComplexGrid estimate(const ComplexGrid& input) const;

    Tensor3f normalize(const ComplexGrid& grid) const;
    ComplexGrid denormalize(const Tensor3f& t) const;
};

/// Builds an untrained estimator for the dataset's grid geometry.
ChannelEstimator make_estimator(const std::string& arch, const Dataset& train_set,
                                std::uint64_t seed);

/// Checkpoint format: magic "NNCK", u32 little-endian JSON header length,
/// JSON header (arch, shapes, normalization sigma, training config, seed,
/// tensor sizes), then the float32 weight tensors in declaration order
/// (weights then bias per conv layer). Written via temp file + rename.
void save_checkpoint(const std::string& path, const ChannelEstimator& est);
ChannelEstimator load_checkpoint(const std::string& path);

}  // namespace chanest

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "chanest/dataset.hpp"
#include "chanest/estimator.hpp"
#include "chanest/train.hpp"
#include "chanest/uncertainty.hpp"

namespace chanest {

enum class AugmentationMode {
    AdversarialOnly,  // retrain on D union A (default)
    LiteralUnion,     // retrain on D union V
};

struct RetrainConfig {
    int max_iterations = 5;        // loop bound
    double tolerance = 1e-4;       // stop when validation MSE drops below
    double uncertain_fraction = 0.2;
    double fgsm_epsilon = -1.0;    // absolute; < 0 selects 0.05 * input std
    AugmentationMode mode = AugmentationMode::AdversarialOnly;
    TrainConfig train{.max_epochs = 20};

    void validate() const;  // throws InvalidParameter
};

struct IterationRecord {
    int iteration = 0;  // 1-based
    std::vector<int> selected;
    double val_mse_before = 0.0;
    double val_mse_after = 0.0;
    double mean_uncertainty_before = 0.0;
    double mean_uncertainty_after = 0.0;
    int num_selected = 0;
    int train_set_size = 0;
};

/// Per-example MC-dropout uncertainty (summary entropy) over a dataset.
std::vector<double> score_uncertainty(const ChannelEstimator& est, const Dataset& ds,
                                      const McConfig& mc);

/// Indices of the ceil(fraction * N) highest scores; ties resolved toward
/// the lower index. Result is sorted ascending.
std::vector<int> select_uncertain(std::span<const double> scores, double fraction);

/// FGSM on the regression loss: input' = input + epsilon * sign(dMSE/dinput)
/// evaluated at the example's true target; the target is unchanged and the
/// copy is flagged adversarial.
DatasetExample fgsm_perturb(const ChannelEstimator& est, const DatasetExample& example,
                            double epsilon);

struct RetrainResult {
    ChannelEstimator estimator;
    std::vector<IterationRecord> records;
};

/// The uncertainty-aware retraining loop: per iteration, score the
/// validation set, select the most uncertain examples, build adversarial
/// copies, warm-start retrain on the augmented training set, and stop early
/// once validation MSE falls below the tolerance.
RetrainResult retrain_loop(ChannelEstimator est, const Dataset& train_set,
                           const Dataset& val_set, const RetrainConfig& cfg,
                           const McConfig& mc);

/// Dropout-off validation MSE in denormalized grid units.
double validation_mse(const ChannelEstimator& est, const Dataset& ds);

}  // namespace chanest

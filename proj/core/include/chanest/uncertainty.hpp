#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "chanest/nn.hpp"
#include "chanest/tensor.hpp"

namespace chanest {

struct McConfig {
    int num_passes = 32;  // T
    std::uint64_t base_seed = 0;
    double alpha = 0.05;  // CI level
};

/// T stochastic forward passes and their elementwise reductions.
struct McPrediction {
    std::vector<Tensor3f> samples;
    Tensor3d mean;
    Tensor3d variance;  // unbiased (T-1); zeros when !variance_defined
    bool variance_defined = false;
};

struct UncertaintySummary {
    double scalar_variance = 0.0;  // mean of per-element variances
    double scalar_entropy = 0.0;   // mean per-element Gaussian differential entropy
    Tensor3d ci_halfwidth;
};

/// Variance floor inside the entropy log, so zero-variance predictions map
/// to a finite entropy floor.
inline constexpr double kEntropyVarianceFloor = 1e-12;

/// Runs T forward passes with dropout active, pass i seeded by
/// (base_seed, i); reductions are computed in pass order.
McPrediction mc_predict(const NeuralNet<float>& net, const Tensor3f& input,
                        const McConfig& cfg);

/// Unbiased sample variance, sum((y_i - mean)^2) / (T - 1). A constant
/// sequence returns exactly 0. Throws InsufficientSamples for length < 2.
double sample_variance(std::span<const double> values);

/// Inverse standard normal CDF (Acklam's rational approximation plus one
/// Halley refinement step; absolute error well below 1.2e-9).
double inverse_normal_cdf(double p);

/// z_{alpha/2} * s / sqrt(T)
double ci_halfwidth(double sample_std, std::size_t num_samples, double alpha);

/// mean +/- z_{alpha/2} * S / sqrt(T)
std::pair<double, double> confidence_interval(std::span<const double> values,
                                              double alpha);

/// Classification predictive entropy -sum p log p (natural log, 0 log 0 = 0).
/// Probabilities must be non-negative and sum to 1 within 1e-9.
double predictive_entropy(std::span<const double> probs);

/// Scalar reductions of an MC prediction: mean variance, mean Gaussian
/// differential entropy 0.5*ln(2*pi*e*(S^2 + floor)), and per-element CI
/// half-widths. Requires T >= 2.
UncertaintySummary summarize(const McPrediction& pred, double alpha);

}  // namespace chanest

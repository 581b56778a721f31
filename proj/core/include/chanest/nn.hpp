#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chanest/tensor.hpp"

namespace chanest {

enum class LayerKind { Conv2d, Relu, Dropout };

/// Architecture description of one layer (no weights).
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int out_channels = 0;  // conv
    int kh = 0, kw = 0;    // conv, odd (same padding)
    double dropout_rate = 0.0;
};

/// Parses "conv:9x9x16,relu,dropout:0.1,conv:5x5x2" into layer specs.
std::vector<LayerSpec> parse_arch(const std::string& arch);
std::string arch_to_string(const std::vector<LayerSpec>& spec);

/// Default estimator architecture: three dropout-equipped conv blocks and a
/// linear conv head, sized to train in minutes on a laptop core.
inline constexpr const char* kDefaultArch =
    "conv:9x9x16,relu,dropout:0.1,conv:5x5x16,relu,dropout:0.1,"
    "conv:5x5x8,relu,dropout:0.1,conv:5x5x2";

template <typename S>
struct Layer {
    LayerKind kind = LayerKind::Relu;
    // Conv2d ([out_c][in_c][kh][kw] weights, same padding, odd kernels).
    int in_c = 0, out_c = 0, kh = 0, kw = 0;
    std::vector<S> weights;
    std::vector<S> bias;
    // Dropout.
    double rate = 0.0;
};

template <typename S>
struct ForwardTrace {
    std::vector<Tensor3<S>> acts;  // acts[0] = input, acts[i+1] = output of layer i
    std::vector<std::vector<std::uint8_t>> keep_masks;  // per dropout layer use
};

template <typename S>
struct BackwardResult {
    double loss = 0.0;
    std::vector<std::vector<S>> weight_grads;  // aligned with layers
    std::vector<std::vector<S>> bias_grads;
    Tensor3<S> input_grad;
};

/// Feed-forward stack of conv / relu / dropout layers operating on
/// (channels, height, width) tensors. Immutable during inference; forward
/// passes are pure functions of (input, dropout flag, seed) and safe to run
/// concurrently.
template <typename S>
class NeuralNet {
public:
    NeuralNet() = default;

    /// Builds a network with He-normal seeded weights. Kernel dims must be
    /// odd; the final layer must restore out_channels = in_c of the target.
    static NeuralNet make(const std::vector<LayerSpec>& spec, int in_c, int in_h,
                          int in_w, std::uint64_t seed);

    /// When dropout_active, each dropout layer zeroes elements with its rate
    /// and scales survivors by 1/(1-rate); masks are drawn from `seed`.
    Tensor3<S> forward(const Tensor3<S>& input, bool dropout_active,
                       std::uint64_t seed) const;

    Tensor3<S> forward(const Tensor3<S>& input, bool dropout_active, std::uint64_t seed,
                       ForwardTrace<S>& trace) const;

    /// MSE loss over all output elements against `target`; returns loss,
    /// d(loss)/d(weights) and d(loss)/d(input).
    BackwardResult<S> backward(const Tensor3<S>& input, const Tensor3<S>& target,
                               bool dropout_active, std::uint64_t seed) const;

    int in_c = 0, in_h = 0, in_w = 0;
    std::vector<Layer<S>> layers;

    int out_channels() const;
    std::size_t num_params() const;
    bool all_finite() const;

    template <typename T>
    NeuralNet<T> cast() const;
};

/// Mean squared error over all elements of two same-shape tensors.
template <typename S>
double mse_loss(const Tensor3<S>& a, const Tensor3<S>& b);

using NeuralNetF = NeuralNet<float>;
using NeuralNetD = NeuralNet<double>;

}  // namespace chanest

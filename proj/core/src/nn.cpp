#include "chanest/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <sstream>

#include "chanest/errors.hpp"
#include "chanest/rng.hpp"

namespace chanest {

std::vector<LayerSpec> parse_arch(const std::string& arch) {
    std::vector<LayerSpec> spec;
    std::istringstream ss(arch);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        LayerSpec layer;
        if (item == "relu") {
            layer.kind = LayerKind::Relu;
        } else if (item.rfind("dropout:", 0) == 0) {
            layer.kind = LayerKind::Dropout;
            layer.dropout_rate = std::stod(item.substr(8));
            if (layer.dropout_rate < 0.0 || layer.dropout_rate >= 1.0)
                throw InvalidParameter("arch: dropout rate must be in [0, 1)");
        } else if (item.rfind("conv:", 0) == 0) {
            layer.kind = LayerKind::Conv2d;
            int kh = 0, kw = 0, oc = 0;
            char x1 = 0, x2 = 0;
            std::istringstream cs(item.substr(5));
            if (!(cs >> kh >> x1 >> kw >> x2 >> oc) || x1 != 'x' || x2 != 'x')
                throw InvalidParameter("arch: bad conv spec '" + item + "'");
            if (kh <= 0 || kw <= 0 || oc <= 0 || kh % 2 == 0 || kw % 2 == 0)
                throw InvalidParameter("arch: conv kernels must be positive odd");
            layer.kh = kh;
            layer.kw = kw;
            layer.out_channels = oc;
        } else {
            throw InvalidParameter("arch: unknown layer '" + item + "'");
        }
        spec.push_back(layer);
    }
    if (spec.empty()) throw InvalidParameter("arch: empty architecture");
    return spec;
}

std::string arch_to_string(const std::vector<LayerSpec>& spec) {
    std::ostringstream os;
    bool first = true;
    for (const LayerSpec& l : spec) {
        if (!first) os << ',';
        first = false;
        switch (l.kind) {
            case LayerKind::Conv2d:
                os << "conv:" << l.kh << 'x' << l.kw << 'x' << l.out_channels;
                break;
            case LayerKind::Relu: os << "relu"; break;
            case LayerKind::Dropout: os << "dropout:" << l.dropout_rate; break;
        }
    }
    return os.str();
}

namespace {

template <typename S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapRM = Eigen::Map<MatRM<S>>;
template <typename S>
using ConstMapRM = Eigen::Map<const MatRM<S>>;

/// Builds the patch matrix: row = output pixel (y * w + x), column =
/// (ic, ky, kx). Same padding with zeros.
template <typename S>
void im2col(const Tensor3<S>& in, int kh, int kw, std::vector<S>& cols) {
    const int h = in.h, w = in.w, c = in.c;
    const int pad_y = kh / 2, pad_x = kw / 2;
    const std::size_t patch = static_cast<std::size_t>(c) * kh * kw;
    cols.assign(static_cast<std::size_t>(h) * w * patch, S(0));

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            S* row = cols.data() + (static_cast<std::size_t>(y) * w + x) * patch;
            for (int ic = 0; ic < c; ++ic) {
                for (int ky = 0; ky < kh; ++ky) {
                    const int sy = y + ky - pad_y;
                    if (sy < 0 || sy >= h) continue;
                    const S* src = &in.v[(static_cast<std::size_t>(ic) * h + sy) * w];
                    S* dst = row + (static_cast<std::size_t>(ic) * kh + ky) * kw;
                    const int x0 = std::max(0, pad_x - x);
                    const int x1 = std::min(kw, w + pad_x - x);
                    for (int kx = x0; kx < x1; ++kx) dst[kx] = src[x + kx - pad_x];
                }
            }
        }
    }
}

/// Scatter-add of the patch-gradient matrix back onto the input gradient.
template <typename S>
void col2im(const S* cols, int c, int h, int w, int kh, int kw, Tensor3<S>& grad) {
    const int pad_y = kh / 2, pad_x = kw / 2;
    const std::size_t patch = static_cast<std::size_t>(c) * kh * kw;
    grad = Tensor3<S>(c, h, w);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const S* row = cols + (static_cast<std::size_t>(y) * w + x) * patch;
            for (int ic = 0; ic < c; ++ic) {
                for (int ky = 0; ky < kh; ++ky) {
                    const int sy = y + ky - pad_y;
                    if (sy < 0 || sy >= h) continue;
                    S* dst = &grad.v[(static_cast<std::size_t>(ic) * h + sy) * w];
                    const S* src = row + (static_cast<std::size_t>(ic) * kh + ky) * kw;
                    const int x0 = std::max(0, pad_x - x);
                    const int x1 = std::min(kw, w + pad_x - x);
                    for (int kx = x0; kx < x1; ++kx) dst[x + kx - pad_x] += src[kx];
                }
            }
        }
    }
}

template <typename S>
std::vector<S>& col_workspace() {
    thread_local std::vector<S> ws;
    return ws;
}

template <typename S>
void conv_forward(const Layer<S>& layer, const Tensor3<S>& in, Tensor3<S>& out) {
    const int hw = in.h * in.w;
    const std::size_t patch = static_cast<std::size_t>(layer.in_c) * layer.kh * layer.kw;
    std::vector<S>& cols = col_workspace<S>();
    im2col(in, layer.kh, layer.kw, cols);

    ConstMapRM<S> a(cols.data(), hw, static_cast<Eigen::Index>(patch));
    ConstMapRM<S> wmat(layer.weights.data(), layer.out_c,
                       static_cast<Eigen::Index>(patch));
    MatRM<S> o(hw, layer.out_c);
    o.noalias() = a * wmat.transpose();

    out = Tensor3<S>(layer.out_c, in.h, in.w);
    for (int oc = 0; oc < layer.out_c; ++oc) {
        const S b = layer.bias[oc];
        S* dst = &out.v[static_cast<std::size_t>(oc) * hw];
        for (int p = 0; p < hw; ++p) dst[p] = o(p, oc) + b;
    }
}

}  // namespace

template <typename S>
NeuralNet<S> NeuralNet<S>::make(const std::vector<LayerSpec>& spec, int in_c, int in_h,
                                int in_w, std::uint64_t seed) {
    if (in_c <= 0 || in_h <= 0 || in_w <= 0)
        throw InvalidParameter("network input shape must be positive");
    NeuralNet net;
    net.in_c = in_c;
    net.in_h = in_h;
    net.in_w = in_w;

    int cur_c = in_c;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const LayerSpec& ls = spec[i];
        Layer<S> layer;
        layer.kind = ls.kind;
        switch (ls.kind) {
            case LayerKind::Conv2d: {
                layer.in_c = cur_c;
                layer.out_c = ls.out_channels;
                layer.kh = ls.kh;
                layer.kw = ls.kw;
                const std::size_t fan_in =
                    static_cast<std::size_t>(cur_c) * ls.kh * ls.kw;
                layer.weights.resize(fan_in * ls.out_channels);
                layer.bias.assign(ls.out_channels, S(0));
                Rng rng(derive_seed(seed, i));
                const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
                for (S& w : layer.weights) w = static_cast<S>(stddev * rng.normal());
                cur_c = ls.out_channels;
                break;
            }
            case LayerKind::Relu: break;
            case LayerKind::Dropout:
                if (ls.dropout_rate < 0.0 || ls.dropout_rate >= 1.0)
                    throw InvalidParameter("dropout rate must be in [0, 1)");
                layer.rate = ls.dropout_rate;
                break;
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

template <typename S>
int NeuralNet<S>::out_channels() const {
    int c = in_c;
    for (const auto& l : layers)
        if (l.kind == LayerKind::Conv2d) c = l.out_c;
    return c;
}

template <typename S>
std::size_t NeuralNet<S>::num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

template <typename S>
bool NeuralNet<S>::all_finite() const {
    for (const auto& l : layers) {
        for (S w : l.weights)
            if (!std::isfinite(static_cast<double>(w))) return false;
        for (S b : l.bias)
            if (!std::isfinite(static_cast<double>(b))) return false;
    }
    return true;
}

template <typename S>
template <typename T>
NeuralNet<T> NeuralNet<S>::cast() const {
    NeuralNet<T> out;
    out.in_c = in_c;
    out.in_h = in_h;
    out.in_w = in_w;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
        Layer<T> nl;
        nl.kind = l.kind;
        nl.in_c = l.in_c;
        nl.out_c = l.out_c;
        nl.kh = l.kh;
        nl.kw = l.kw;
        nl.rate = l.rate;
        nl.weights.assign(l.weights.begin(), l.weights.end());
        nl.bias.assign(l.bias.begin(), l.bias.end());
        out.layers.push_back(std::move(nl));
    }
    return out;
}

template <typename S>
Tensor3<S> NeuralNet<S>::forward(const Tensor3<S>& input, bool dropout_active,
                                 std::uint64_t seed, ForwardTrace<S>& trace) const {
    if (input.c != in_c || input.h != in_h || input.w != in_w)
        throw ShapeMismatch("forward: input shape does not match network");

    trace.acts.clear();
    trace.keep_masks.assign(layers.size(), {});
    trace.acts.reserve(layers.size() + 1);
    trace.acts.push_back(input);

    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer<S>& layer = layers[i];
        const Tensor3<S>& in = trace.acts.back();
        Tensor3<S> out;
        switch (layer.kind) {
            case LayerKind::Conv2d:
                conv_forward(layer, in, out);
                break;
            case LayerKind::Relu: {
                out = in;
                for (S& v : out.v) v = v > S(0) ? v : S(0);
                break;
            }
            case LayerKind::Dropout: {
                out = in;
                if (dropout_active && layer.rate > 0.0) {
                    Rng rng(derive_seed(seed, i));
                    const S inv_keep = static_cast<S>(1.0 / (1.0 - layer.rate));
                    std::vector<std::uint8_t> keep(out.numel());
                    for (std::size_t p = 0; p < out.numel(); ++p) {
                        keep[p] = rng.uniform() >= layer.rate ? 1 : 0;
                        out.v[p] = keep[p] ? out.v[p] * inv_keep : S(0);
                    }
                    trace.keep_masks[i] = std::move(keep);
                }
                break;
            }
        }
        trace.acts.push_back(std::move(out));
    }
    return trace.acts.back();
}

template <typename S>
Tensor3<S> NeuralNet<S>::forward(const Tensor3<S>& input, bool dropout_active,
                                 std::uint64_t seed) const {
    ForwardTrace<S> trace;
    return forward(input, dropout_active, seed, trace);
}

template <typename S>
double mse_loss(const Tensor3<S>& a, const Tensor3<S>& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("mse_loss: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.numel());
}

template <typename S>
BackwardResult<S> NeuralNet<S>::backward(const Tensor3<S>& input,
                                         const Tensor3<S>& target, bool dropout_active,
                                         std::uint64_t seed) const {
    ForwardTrace<S> trace;
    Tensor3<S> out = forward(input, dropout_active, seed, trace);
    if (!out.same_shape(target)) throw ShapeMismatch("backward: target shape mismatch");

    BackwardResult<S> res;
    res.weight_grads.resize(layers.size());
    res.bias_grads.resize(layers.size());
    res.loss = mse_loss(out, target);

    // d(mean squared error)/d(out)
    Tensor3<S> grad(out.c, out.h, out.w);
    const double scale = 2.0 / static_cast<double>(out.numel());
    for (std::size_t i = 0; i < out.numel(); ++i)
        grad.v[i] = static_cast<S>(scale * (static_cast<double>(out.v[i]) -
                                            static_cast<double>(target.v[i])));

    for (std::size_t li = layers.size(); li-- > 0;) {
        const Layer<S>& layer = layers[li];
        const Tensor3<S>& in = trace.acts[li];
        switch (layer.kind) {
            case LayerKind::Conv2d: {
                const int hw = in.h * in.w;
                const std::size_t patch =
                    static_cast<std::size_t>(layer.in_c) * layer.kh * layer.kw;

                // Recompute the patch matrix of this layer's input.
                std::vector<S>& cols = col_workspace<S>();
                im2col(in, layer.kh, layer.kw, cols);
                ConstMapRM<S> a(cols.data(), hw, static_cast<Eigen::Index>(patch));

                // grad as (hw x out_c)
                MatRM<S> g(hw, layer.out_c);
                for (int oc = 0; oc < layer.out_c; ++oc) {
                    const S* src = &grad.v[static_cast<std::size_t>(oc) * hw];
                    for (int p = 0; p < hw; ++p) g(p, oc) = src[p];
                }

                res.weight_grads[li].resize(layer.weights.size());
                MapRM<S> dw(res.weight_grads[li].data(), layer.out_c,
                            static_cast<Eigen::Index>(patch));
                dw.noalias() = g.transpose() * a;

                res.bias_grads[li].resize(layer.bias.size());
                for (int oc = 0; oc < layer.out_c; ++oc)
                    res.bias_grads[li][oc] = g.col(oc).sum();

                ConstMapRM<S> wmat(layer.weights.data(), layer.out_c,
                                   static_cast<Eigen::Index>(patch));
                MatRM<S> dcols(hw, static_cast<Eigen::Index>(patch));
                dcols.noalias() = g * wmat;
                col2im(dcols.data(), layer.in_c, in.h, in.w, layer.kh, layer.kw, grad);
                break;
            }
            case LayerKind::Relu: {
                for (std::size_t p = 0; p < grad.numel(); ++p)
                    if (in.v[p] <= S(0)) grad.v[p] = S(0);
                break;
            }
            case LayerKind::Dropout: {
                if (dropout_active && layer.rate > 0.0) {
                    const S inv_keep = static_cast<S>(1.0 / (1.0 - layer.rate));
                    const auto& keep = trace.keep_masks[li];
                    for (std::size_t p = 0; p < grad.numel(); ++p)
                        grad.v[p] = keep[p] ? grad.v[p] * inv_keep : S(0);
                }
                break;
            }
        }
    }
    res.input_grad = std::move(grad);
    return res;
}

template double mse_loss(const Tensor3<float>&, const Tensor3<float>&);
template double mse_loss(const Tensor3<double>&, const Tensor3<double>&);
template class NeuralNet<float>;
template class NeuralNet<double>;
template NeuralNet<double> NeuralNet<float>::cast<double>() const;
template NeuralNet<float> NeuralNet<double>::cast<float>() const;

}  // namespace chanest

#pragma once

#include <cstddef>
#include <vector>

namespace chanest {

/// Dense (channels, height, width) tensor, width fastest.
template <typename S>
struct Tensor3 {
    int c = 0, h = 0, w = 0;
    std::vector<S> v;

    Tensor3() = default;
    Tensor3(int c_, int h_, int w_)
        : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, S(0)) {}

    std::size_t numel() const { return v.size(); }

    S& at(int ci, int yi, int xi) {
        return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
    }
    S at(int ci, int yi, int xi) const {
        return v[(static_cast<std::size_t>(ci) * h + yi) * w + xi];
    }

    bool same_shape(const Tensor3& o) const { return c == o.c && h == o.h && w == o.w; }

    template <typename T>
    Tensor3<T> cast() const {
        Tensor3<T> out(c, h, w);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T>(v[i]);
        return out;
    }
};

using Tensor3f = Tensor3<float>;
using Tensor3d = Tensor3<double>;

}  // namespace chanest

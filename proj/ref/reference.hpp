#ifndef SUBPEL_REF_REFERENCE_HPP
#define SUBPEL_REF_REFERENCE_HPP

// Naive serial counterparts of the optimized kernels. Written for obvious
// correctness, one output element at a time, with no shared intermediates
// and no threading. Tests compare the optimized paths against these; the
// benchmark target compares their speed. Nothing in the production library
// may call into this namespace.

#include <cstdint>
#include <vector>

#include "subpel/conv.hpp"
#include "subpel/plane.hpp"
#include "subpel/position.hpp"
#include "subpel/tensor.hpp"

namespace subpel::ref {

// Direct 3x3 convolution: six nested loops, boundary handled per tap.
template <class T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvLayerT<T>& layer,
                          PaddingMode padding) {
    const int n = input.n(), ic = input.c(), h = input.h(), w = input.w();
    const int oc = layer.out_ch();
    TensorT<T> out(n, oc, h, w);
    for (int in = 0; in < n; ++in) {
        for (int o = 0; o < oc; ++o) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    T acc = layer.bias[o];
                    for (int c = 0; c < ic; ++c) {
                        for (int ky = -1; ky <= 1; ++ky) {
                            for (int kx = -1; kx <= 1; ++kx) {
                                int sy = y + ky;
                                int sx = x + kx;
                                T v;
                                if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                                    if (padding == PaddingMode::zero) {
                                        v = T(0);
                                    } else {
                                        sy = sy < 0 ? 0 : (sy >= h ? h - 1 : sy);
                                        sx = sx < 0 ? 0 : (sx >= w ? w - 1 : sx);
                                        v = input.at(in, c, sy, sx);
                                    }
                                } else {
                                    v = input.at(in, c, sy, sx);
                                }
                                acc += layer.weights.at(o, c, ky + 1, kx + 1) * v;
                            }
                        }
                    }
                    out.at(in, o, y, x) = acc;
                }
            }
        }
    }
    return out;
}

// Scalar-loop mean-square error, batch-normalized.
template <class T>
T mse(const TensorT<T>& pred, const TensorT<T>& target) {
    T acc = T(0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = pred.flat()[i] - target.flat()[i];
        acc += d * d;
    }
    return acc / static_cast<T>(pred.n());
}

// 3x3 correlation with replicate boundary, one pixel at a time.
PlaneF blur(const Plane& src, const double kernel[9]);

// HEVC fractional interpolation computed per output pixel: the handful of
// horizontal intermediates each pixel needs are recomputed on the spot.
Plane interpolate_position(const Plane& src, FracPos pos);

struct SearchResult {
    int mvx_pel = 0;
    int mvy_pel = 0;
    long long sad = 0;
};

// Exhaustive integer-pel search: enumerates every candidate in the clipped
// window, then picks the minimum by (sad, |mvy|, |mvx|, scan order).
SearchResult full_search(const Plane& target, int bx, int by, int bw, int bh,
                         const Plane& reference, int range);

} // namespace subpel::ref

#endif

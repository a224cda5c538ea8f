#ifndef SUBPEL_CONV_HPP
#define SUBPEL_CONV_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "subpel/errors.hpp"
#include "subpel/tensor.hpp"

namespace subpel {

enum class PaddingMode { replicate, zero };

// One 3x3 convolution layer: weights (out_ch, in_ch, 3, 3), per-channel bias,
// and an optional PReLU slope shared by all channels of the layer.
template <class T>
struct ConvLayerT {
    TensorT<T> weights;          // (out_ch, in_ch, 3, 3)
    std::vector<T> bias;         // out_ch
    bool has_prelu = false;
    T prelu_slope = T(0);

    int out_ch() const { return weights.n(); }
    int in_ch() const { return weights.c(); }

    static ConvLayerT make(int out_ch, int in_ch, bool prelu, T slope = T(0.25)) {
        ConvLayerT l;
        l.weights = TensorT<T>(out_ch, in_ch, 3, 3);
        l.bias.assign(out_ch, T(0));
        l.has_prelu = prelu;
        l.prelu_slope = prelu ? slope : T(0);
        return l;
    }
};

using ConvLayer = ConvLayerT<float>;

template <class T>
struct ConvGradsT {
    TensorT<T> input;            // same shape as the layer input
    TensorT<T> weights;          // same shape as layer.weights
    std::vector<T> bias;         // out_ch
};

namespace detail {

// Copies (n, c, h, w) into an (h+2, w+2) padded plane per (n, c).
// Replicate padding clamps the source coordinate, zero padding writes 0.
template <class T>
void pad_plane(const T* src, int h, int w, PaddingMode mode, T* dst) {
    const int pw = w + 2;
    for (int y = -1; y <= h; ++y) {
        T* row = dst + (y + 1) * pw;
        if (mode == PaddingMode::zero && (y < 0 || y >= h)) {
            for (int x = 0; x < pw; ++x) row[x] = T(0);
            continue;
        }
        const int sy = y < 0 ? 0 : (y >= h ? h - 1 : y);
        const T* srow = src + sy * w;
        if (mode == PaddingMode::zero) {
            row[0] = T(0);
            for (int x = 0; x < w; ++x) row[x + 1] = srow[x];
            row[pw - 1] = T(0);
        } else {
            row[0] = srow[0];
            for (int x = 0; x < w; ++x) row[x + 1] = srow[x];
            row[pw - 1] = srow[w - 1];
        }
    }
}

// Folds a padded-plane gradient (h+2, w+2) back onto the (h, w) input
// gradient, the exact adjoint of pad_plane.
template <class T>
void unpad_plane_adjoint(const T* gpad, int h, int w, PaddingMode mode, T* gdst) {
    const int pw = w + 2;
    for (int y = 0; y < h; ++y) {
        const T* row = gpad + (y + 1) * pw;
        T* drow = gdst + y * w;
        for (int x = 0; x < w; ++x) drow[x] = row[x + 1];
    }
    if (mode == PaddingMode::zero) return;
    // Replicate padding: every padded cell read a clamped source pixel, so
    // its gradient accumulates onto that pixel.
    for (int x = -1; x <= w; ++x) {
        const int sx = x < 0 ? 0 : (x >= w ? w - 1 : x);
        gdst[0 * w + sx] += gpad[0 * pw + (x + 1)];
        gdst[(h - 1) * w + sx] += gpad[(h + 1) * pw + (x + 1)];
    }
    for (int y = 0; y < h; ++y) {
        gdst[y * w + 0] += gpad[(y + 1) * pw + 0];
        gdst[y * w + (w - 1)] += gpad[(y + 1) * pw + (pw - 1)];
    }
}

} // namespace detail

// 3x3 convolution, spatial size preserved. Output (n, out_ch, h, w).
// Per output plane the accumulation order is fixed (in_ch, then tap row),
// so results are identical for any thread count.
template <class T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const ConvLayerT<T>& layer,
                          PaddingMode padding = PaddingMode::replicate) {
    if (input.c() != layer.in_ch()) {
        throw ContractError("conv2d_forward: input has " + std::to_string(input.c()) +
                            " channels, layer expects " + std::to_string(layer.in_ch()));
    }
    const int n = input.n(), ic = input.c(), h = input.h(), w = input.w();
    const int oc = layer.out_ch();
    const int pw = w + 2;

    // Padded copy of the whole input, built once and shared read-only.
    std::vector<T> padded(static_cast<std::size_t>(n) * ic * (h + 2) * pw);
    for (int in = 0; in < n; ++in)
        for (int c = 0; c < ic; ++c)
            detail::pad_plane(input.plane(in, c), h, w, padding,
                              padded.data() + (static_cast<std::size_t>(in) * ic + c) * (h + 2) * pw);

    TensorT<T> out(n, oc, h, w);

#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int in = 0; in < n; ++in) {
        for (int o = 0; o < oc; ++o) {
            T* op = out.plane(in, o);
            const T b = layer.bias[o];
            for (int i = 0; i < h * w; ++i) op[i] = b;
            for (int c = 0; c < ic; ++c) {
                const T* pp = padded.data() + (static_cast<std::size_t>(in) * ic + c) * (h + 2) * pw;
                const T* wk = layer.weights.plane(o, c);
                for (int ky = 0; ky < 3; ++ky) {
                    const T w0 = wk[ky * 3 + 0], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
                    for (int y = 0; y < h; ++y) {
                        const T* prow = pp + (y + ky) * pw;
                        T* orow = op + y * w;
                        for (int x = 0; x < w; ++x)
                            orow[x] += w0 * prow[x] + w1 * prow[x + 1] + w2 * prow[x + 2];
                    }
                }
            }
        }
    }
    return out;
}

// Exact adjoint of conv2d_forward under the same padding mode. Gradient
// accumulation orders are fixed per output slot, independent of threading.
template <class T>
ConvGradsT<T> conv2d_backward(const TensorT<T>& input, const ConvLayerT<T>& layer,
                              const TensorT<T>& grad_out,
                              PaddingMode padding = PaddingMode::replicate) {
    if (input.c() != layer.in_ch()) {
        throw ContractError("conv2d_backward: input has " + std::to_string(input.c()) +
                            " channels, layer expects " + std::to_string(layer.in_ch()));
    }
    if (grad_out.n() != input.n() || grad_out.c() != layer.out_ch() ||
        grad_out.h() != input.h() || grad_out.w() != input.w()) {
        throw ContractError("conv2d_backward: grad_out shape (" + grad_out.shape_str() +
                            ") does not match forward output (" +
                            TensorT<T>::shape_str(input.n(), layer.out_ch(), input.h(), input.w()) + ")");
    }
    const int n = input.n(), ic = input.c(), h = input.h(), w = input.w();
    const int oc = layer.out_ch();
    const int ph = h + 2, pw = w + 2;

    std::vector<T> padded(static_cast<std::size_t>(n) * ic * ph * pw);
    for (int in = 0; in < n; ++in)
        for (int c = 0; c < ic; ++c)
            detail::pad_plane(input.plane(in, c), h, w, padding,
                              padded.data() + (static_cast<std::size_t>(in) * ic + c) * ph * pw);

    ConvGradsT<T> g;
    g.input = TensorT<T>(n, ic, h, w);
    g.weights = TensorT<T>(oc, ic, 3, 3);
    g.bias.assign(oc, T(0));

    // grad wrt input: scatter grad_out through the transposed taps into the
    // padded frame, then fold the frame border back (pad adjoint).
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int in = 0; in < n; ++in) {
        for (int c = 0; c < ic; ++c) {
            std::vector<T> gpad(static_cast<std::size_t>(ph) * pw, T(0));
            for (int o = 0; o < oc; ++o) {
                const T* gop = grad_out.plane(in, o);
                const T* wk = layer.weights.plane(o, c);
                for (int ky = 0; ky < 3; ++ky) {
                    const T w0 = wk[ky * 3 + 0], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
                    for (int y = 0; y < h; ++y) {
                        T* prow = gpad.data() + (y + ky) * pw;
                        const T* grow = gop + y * w;
                        for (int x = 0; x < w; ++x) {
                            prow[x] += w0 * grow[x];
                            prow[x + 1] += w1 * grow[x];
                            prow[x + 2] += w2 * grow[x];
                        }
                    }
                }
            }
            detail::unpad_plane_adjoint(gpad.data(), h, w, padding, g.input.plane(in, c));
        }
    }

    // grad wrt weights: each (o, c) pair owns its nine accumulators, summed
    // over the batch in a fixed order.
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int o = 0; o < oc; ++o) {
        for (int c = 0; c < ic; ++c) {
            T acc[9] = {};
            for (int in = 0; in < n; ++in) {
                const T* gop = grad_out.plane(in, o);
                const T* pp = padded.data() + (static_cast<std::size_t>(in) * ic + c) * ph * pw;
                for (int y = 0; y < h; ++y) {
                    const T* grow = gop + y * w;
                    for (int ky = 0; ky < 3; ++ky) {
                        const T* prow = pp + (y + ky) * pw;
                        T a0 = T(0), a1 = T(0), a2 = T(0);
                        for (int x = 0; x < w; ++x) {
                            const T gv = grow[x];
                            a0 += gv * prow[x];
                            a1 += gv * prow[x + 1];
                            a2 += gv * prow[x + 2];
                        }
                        acc[ky * 3 + 0] += a0;
                        acc[ky * 3 + 1] += a1;
                        acc[ky * 3 + 2] += a2;
                    }
                }
            }
            T* gw = g.weights.plane(o, c);
            for (int k = 0; k < 9; ++k) gw[k] = acc[k];
        }
    }

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int o = 0; o < oc; ++o) {
        T acc = T(0);
        for (int in = 0; in < n; ++in) {
            const T* gop = grad_out.plane(in, o);
            for (int i = 0; i < h * w; ++i) acc += gop[i];
        }
        g.bias[o] = acc;
    }

    return g;
}

// PReLU with one slope shared across all channels.
template <class T>
TensorT<T> prelu_forward(const TensorT<T>& x, T a) {
    TensorT<T> out = TensorT<T>::zeros_like(x);
    const T* src = x.data();
    T* dst = out.data();
    const std::size_t sz = x.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        dst[i] = src[i] > T(0) ? src[i] : a * src[i];
    return out;
}

template <class T>
struct PreluGradsT {
    TensorT<T> x;
    T a;
};

template <class T>
PreluGradsT<T> prelu_backward(const TensorT<T>& x, T a, const TensorT<T>& grad_out) {
    require_same_shape(x, grad_out, "prelu_backward");
    PreluGradsT<T> g{TensorT<T>::zeros_like(x), T(0)};
    const T* xs = x.data();
    const T* gs = grad_out.data();
    T* gx = g.x.data();
    const std::size_t sz = x.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        gx[i] = xs[i] > T(0) ? gs[i] : a * gs[i];
    // The slope gradient is a single sum; keep it serial so the accumulation
    // order never depends on the thread count.
    T ga = T(0);
    for (std::size_t i = 0; i < sz; ++i)
        if (xs[i] <= T(0)) ga += xs[i] * gs[i];
    g.a = ga;
    return g;
}

// Mean-square-error over the batch: loss = sum((pred - target)^2) / n,
// grad = 2 (pred - target) / n. Any further normalization (per-element,
// per-head) is a constant factor applied by the caller.
template <class T>
struct MseResultT {
    T loss;
    TensorT<T> grad;
};

template <class T>
MseResultT<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
    require_same_shape(pred, target, "mse_loss");
    MseResultT<T> r{T(0), TensorT<T>::zeros_like(pred)};
    const T* p = pred.data();
    const T* t = target.data();
    T* g = r.grad.data();
    const T inv_n = T(1) / static_cast<T>(pred.n());
    T acc = T(0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const T d = p[i] - t[i];
        acc += d * d;
        g[i] = T(2) * d * inv_n;
    }
    r.loss = acc * inv_n;
    return r;
}

// Adam with bias correction. One state per parameter tensor; the step
// counter advances by one per call.
template <class T>
struct AdamHyperT {
    T lr = T(1e-4);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
};

template <class T>
struct AdamStateT {
    AdamHyperT<T> hyper;
    std::vector<T> m, v;
    std::int64_t t = 0;

    void step(std::span<T> params, std::span<const T> grads, const std::string& param_name) {
        if (params.size() != grads.size()) {
            throw ContractError("adam_step(" + param_name + "): " +
                                std::to_string(params.size()) + " params vs " +
                                std::to_string(grads.size()) + " grads");
        }
        if (m.empty()) {
            m.assign(params.size(), T(0));
            v.assign(params.size(), T(0));
        } else if (m.size() != params.size()) {
            throw ContractError("adam_step(" + param_name + "): moment size " +
                                std::to_string(m.size()) + " vs param size " +
                                std::to_string(params.size()));
        }
        ++t;
        const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(hyper.beta1), static_cast<double>(t)));
        const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(hyper.beta2), static_cast<double>(t)));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const T gv = grads[i];
            if (!std::isfinite(static_cast<double>(gv))) {
                throw NumericError("non-finite gradient in " + param_name +
                                   " at element " + std::to_string(i));
            }
            m[i] = hyper.beta1 * m[i] + (T(1) - hyper.beta1) * gv;
            v[i] = hyper.beta2 * v[i] + (T(1) - hyper.beta2) * gv * gv;
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            params[i] -= hyper.lr * mhat / (std::sqrt(vhat) + hyper.epsilon);
        }
    }
};

using AdamHyper = AdamHyperT<float>;
using AdamState = AdamStateT<float>;

} // namespace subpel

#endif

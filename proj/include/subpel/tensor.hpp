#ifndef SUBPEL_TENSOR_HPP
#define SUBPEL_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "subpel/errors.hpp"

namespace subpel {

// Dense NCHW tensor. Templated on the scalar type: float is the production
// precision, double is used by the gradient-check paths.
template <class T>
class TensorT {
public:
    TensorT() = default;

    TensorT(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
        if (n < 1 || c < 1 || h < 1 || w < 1) {
            throw ContractError("tensor shape components must be >= 1, got (" +
                                shape_str(n, c, h, w) + ")");
        }
        data_.assign(static_cast<std::size_t>(n) * c * h * w, T(0));
    }

    static TensorT zeros_like(const TensorT& other) {
        return TensorT(other.n_, other.c_, other.h_, other.w_);
    }

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    std::size_t size() const { return data_.size(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> flat() { return {data_.data(), data_.size()}; }
    std::span<const T> flat() const { return {data_.data(), data_.size()}; }

    T& at(int in, int ic, int iy, int ix) {
        return data_[idx(in, ic, iy, ix)];
    }
    T at(int in, int ic, int iy, int ix) const {
        return data_[idx(in, ic, iy, ix)];
    }

    // Pointer to the (n, c) spatial plane, h*w contiguous values.
    T* plane(int in, int ic) { return data_.data() + idx(in, ic, 0, 0); }
    const T* plane(int in, int ic) const { return data_.data() + idx(in, ic, 0, 0); }

    bool same_shape(const TensorT& o) const {
        return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    std::string shape_str() const { return shape_str(n_, c_, h_, w_); }

    static std::string shape_str(int n, int c, int h, int w) {
        return std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w);
    }

private:
    std::size_t idx(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix;
    }

    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensord = TensorT<double>;

template <class T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ContractError(std::string(what) + ": shape (" + a.shape_str() +
                            ") does not match (" + b.shape_str() + ")");
    }
}

} // namespace subpel

#endif

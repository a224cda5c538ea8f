#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "subpel/conv.hpp"
#include "subpel/errors.hpp"
#include "subpel/tensor.hpp"
#include "../ref/reference.hpp"

using namespace subpel;

namespace {

template <class T>
TensorT<T> random_tensor(int n, int c, int h, int w, std::mt19937_64& rng, T lo, T hi) {
    TensorT<T> t(n, c, h, w);
    std::uniform_real_distribution<double> d(static_cast<double>(lo), static_cast<double>(hi));
    for (T& v : t.flat()) v = static_cast<T>(d(rng));
    return t;
}

template <class T>
ConvLayerT<T> random_layer(int oc, int ic, bool prelu, std::mt19937_64& rng) {
    ConvLayerT<T> l = ConvLayerT<T>::make(oc, ic, prelu);
    std::normal_distribution<double> wd(0.0, 0.1);
    for (T& v : l.weights.flat()) v = static_cast<T>(wd(rng));
    std::uniform_real_distribution<double> bd(-0.5, 0.5);
    for (T& v : l.bias) v = static_cast<T>(bd(rng));
    return l;
}

template <class T>
T max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
    REQUIRE(a.same_shape(b));
    T m = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const T d = std::abs(a.flat()[i] - b.flat()[i]);
        if (d > m) m = d;
    }
    return m;
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("tensor shape and accessors") {
    Tensor t(2, 3, 4, 5);
    CHECK(t.n() == 2);
    CHECK(t.c() == 3);
    CHECK(t.h() == 4);
    CHECK(t.w() == 5);
    CHECK(t.size() == 2u * 3 * 4 * 5);
    for (float v : t.flat()) CHECK(v == 0.0f);

    t.at(1, 2, 3, 4) = 7.5f;
    CHECK(t.flat()[t.size() - 1] == 7.5f);
    CHECK(t.plane(1, 2)[3 * 5 + 4] == 7.5f);

    Tensor z = Tensor::zeros_like(t);
    CHECK(z.same_shape(t));
    CHECK(z.at(1, 2, 3, 4) == 0.0f);

    CHECK_THROWS_AS(Tensor(0, 1, 1, 1), ContractError);
    CHECK_THROWS_AS(Tensor(1, 1, -2, 1), ContractError);
}

TEST_CASE("all_finite flags inf and nan") {
    Tensor t(1, 1, 2, 2);
    CHECK(t.all_finite());
    t.at(0, 0, 1, 1) = std::numeric_limits<float>::infinity();
    CHECK_FALSE(t.all_finite());
    t.at(0, 0, 1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("conv2d_forward identity kernel copies input") {
    std::mt19937_64 rng(1);
    const Tensor x = random_tensor<float>(2, 1, 5, 6, rng, 0.0f, 1.0f);
    ConvLayer l = ConvLayer::make(1, 1, false);
    l.weights.at(0, 0, 1, 1) = 1.0f;  // center tap
    for (PaddingMode pm : {PaddingMode::replicate, PaddingMode::zero}) {
        const Tensor y = conv2d_forward(x, l, pm);
        CHECK(max_abs_diff(x, y) == 0.0f);
    }
}

TEST_CASE("conv2d_forward replicate border uses clamped source") {
    // A kernel that reads one pixel above: at the top row, replicate padding
    // must read the top row itself, zero padding must read 0.
    Tensor x(1, 1, 3, 3);
    for (int y = 0; y < 3; ++y)
        for (int xx = 0; xx < 3; ++xx) x.at(0, 0, y, xx) = static_cast<float>(10 * y + xx);
    ConvLayer l = ConvLayer::make(1, 1, false);
    l.weights.at(0, 0, 0, 1) = 1.0f;  // tap at (ky=-1, kx=0)

    const Tensor rep = conv2d_forward(x, l, PaddingMode::replicate);
    CHECK(rep.at(0, 0, 0, 1) == x.at(0, 0, 0, 1));
    CHECK(rep.at(0, 0, 2, 1) == x.at(0, 0, 1, 1));

    const Tensor zer = conv2d_forward(x, l, PaddingMode::zero);
    CHECK(zer.at(0, 0, 0, 1) == 0.0f);
    CHECK(zer.at(0, 0, 2, 1) == x.at(0, 0, 1, 1));
}

TEST_CASE("conv2d_forward matches the direct oracle") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 3);
        const int ic = 1 + static_cast<int>(rng() % 5);
        const int oc = 1 + static_cast<int>(rng() % 5);
        const int h = 1 + static_cast<int>(rng() % 9);
        const int w = 1 + static_cast<int>(rng() % 9);
        const PaddingMode pm = trial % 2 ? PaddingMode::zero : PaddingMode::replicate;

        const Tensor x = random_tensor<float>(n, ic, h, w, rng, 0.0f, 1.0f);
        const ConvLayer l = random_layer<float>(oc, ic, false, rng);
        const Tensor got = conv2d_forward(x, l, pm);
        const Tensor want = ref::conv2d_forward(x, l, pm);
        CHECK(max_abs_diff(got, want) <= 1e-6f);

        // Same comparison in 64-bit.
        const Tensord xd = random_tensor<double>(n, ic, h, w, rng, 0.0, 1.0);
        const ConvLayerT<double> ld = random_layer<double>(oc, ic, false, rng);
        const Tensord gotd = conv2d_forward(xd, ld, pm);
        const Tensord wantd = ref::conv2d_forward(xd, ld, pm);
        CHECK(max_abs_diff(gotd, wantd) <= 1e-12);
    }
}

TEST_CASE("conv2d_forward rejects channel mismatch") {
    const Tensor x(1, 2, 4, 4);
    const ConvLayer l = ConvLayer::make(3, 5, false);
    CHECK_THROWS_AS(conv2d_forward(x, l), ContractError);
}

TEST_CASE("conv2d_backward matches central finite differences") {
    std::mt19937_64 rng(7);
    for (const PaddingMode pm : {PaddingMode::replicate, PaddingMode::zero}) {
        const int n = 2, ic = 3, oc = 2, h = 4, w = 5;
        const Tensord x = random_tensor<double>(n, ic, h, w, rng, -1.0, 1.0);
        const ConvLayerT<double> l = random_layer<double>(oc, ic, false, rng);
        // Loss L = sum(out * r) for a fixed random r, so dL/dout = r.
        const Tensord r = random_tensor<double>(n, oc, h, w, rng, -1.0, 1.0);

        auto loss = [&](const Tensord& xx, const ConvLayerT<double>& ll) {
            const Tensord out = conv2d_forward(xx, ll, pm);
            double acc = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) acc += out.flat()[i] * r.flat()[i];
            return acc;
        };

        const ConvGradsT<double> g = conv2d_backward(x, l, r, pm);
        const double eps = 1e-6;

        for (std::size_t i = 0; i < x.size(); i += 7) {
            Tensord xp = x, xm = x;
            xp.flat()[i] += eps;
            xm.flat()[i] -= eps;
            const double fd = (loss(xp, l) - loss(xm, l)) / (2 * eps);
            CHECK(g.input.flat()[i] == doctest::Approx(fd).epsilon(1e-6));
        }
        for (std::size_t i = 0; i < l.weights.size(); i += 5) {
            ConvLayerT<double> lp = l, lm = l;
            lp.weights.flat()[i] += eps;
            lm.weights.flat()[i] -= eps;
            const double fd = (loss(x, lp) - loss(x, lm)) / (2 * eps);
            CHECK(g.weights.flat()[i] == doctest::Approx(fd).epsilon(1e-6));
        }
        for (std::size_t i = 0; i < l.bias.size(); ++i) {
            ConvLayerT<double> lp = l, lm = l;
            lp.bias[i] += eps;
            lm.bias[i] -= eps;
            const double fd = (loss(x, lp) - loss(x, lm)) / (2 * eps);
            CHECK(g.bias[i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("conv2d_backward rejects bad grad shape") {
    const Tensord x(1, 2, 4, 4);
    const ConvLayerT<double> l = ConvLayerT<double>::make(3, 2, false);
    const Tensord bad(1, 3, 4, 5);
    CHECK_THROWS_AS(conv2d_backward(x, l, bad), ContractError);
}

TEST_CASE("prelu forward values") {
    Tensor x(1, 1, 1, 4);
    x.at(0, 0, 0, 0) = 2.0f;
    x.at(0, 0, 0, 1) = -2.0f;
    x.at(0, 0, 0, 2) = 0.0f;
    x.at(0, 0, 0, 3) = -0.5f;
    const Tensor y = prelu_forward(x, 0.25f);
    CHECK(y.at(0, 0, 0, 0) == 2.0f);
    CHECK(y.at(0, 0, 0, 1) == -0.5f);
    CHECK(y.at(0, 0, 0, 2) == 0.0f);
    CHECK(y.at(0, 0, 0, 3) == -0.125f);
}

TEST_CASE("prelu_backward matches central finite differences") {
    std::mt19937_64 rng(11);
    const Tensord x = random_tensor<double>(2, 2, 3, 3, rng, -1.0, 1.0);
    const Tensord r = random_tensor<double>(2, 2, 3, 3, rng, -1.0, 1.0);
    const double a = 0.3;

    auto loss = [&](const Tensord& xx, double aa) {
        const Tensord out = prelu_forward(xx, aa);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) acc += out.flat()[i] * r.flat()[i];
        return acc;
    };

    const PreluGradsT<double> g = prelu_backward(x, a, r);
    const double eps = 1e-7;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensord xp = x, xm = x;
        xp.flat()[i] += eps;
        xm.flat()[i] -= eps;
        const double fd = (loss(xp, a) - loss(xm, a)) / (2 * eps);
        CHECK(g.x.flat()[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    const double fda = (loss(x, a + eps) - loss(x, a - eps)) / (2 * eps);
    CHECK(g.a == doctest::Approx(fda).epsilon(1e-6));
}

TEST_CASE("mse_loss values and gradient") {
    Tensord pred(2, 1, 1, 2), target(2, 1, 1, 2);
    pred.flat()[0] = 1.0; pred.flat()[1] = 2.0; pred.flat()[2] = 3.0; pred.flat()[3] = 4.0;
    target.flat()[0] = 0.0; target.flat()[1] = 2.0; target.flat()[2] = 5.0; target.flat()[3] = 3.0;
    // SSE = 1 + 0 + 4 + 1 = 6; n = 2 -> loss 3.
    const MseResultT<double> r = mse_loss(pred, target);
    CHECK(r.loss == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(r.grad.flat()[0] == doctest::Approx(1.0));    // 2*1/2
    CHECK(r.grad.flat()[2] == doctest::Approx(-2.0));   // 2*(-2)/2
    CHECK(r.grad.flat()[1] == 0.0);

    Tensord bad(1, 1, 1, 2);
    CHECK_THROWS_AS(mse_loss(pred, bad), ContractError);
}

TEST_CASE("adam single step closed form") {
    // One parameter 1.0, gradient 1.0, lr 1e-4, first step:
    // m_hat = v_hat = 1, delta = lr / (1 + eps) -> p = 0.999900000001.
    AdamStateT<double> s;
    s.hyper.lr = 1e-4;
    std::vector<double> p{1.0}, g{1.0};
    s.step(std::span<double>(p), std::span<const double>(g), "p");
    CHECK(p[0] == doctest::Approx(0.999900000001).epsilon(1e-12));
    CHECK(s.t == 1);

    // Second step with the same gradient keeps moving down.
    s.step(std::span<double>(p), std::span<const double>(g), "p");
    CHECK(p[0] < 0.9999);
    CHECK(s.t == 2);
}

TEST_CASE("adam lr zero leaves parameters bitwise unchanged") {
    AdamStateT<float> s;
    s.hyper.lr = 0.0f;
    std::vector<float> p{0.5f, -1.25f}, g{3.0f, -2.0f};
    const std::vector<float> before = p;
    s.step(std::span<float>(p), std::span<const float>(g), "p");
    s.step(std::span<float>(p), std::span<const float>(g), "p");
    CHECK(p == before);
}

TEST_CASE("adam state errors") {
    AdamStateT<float> s;
    std::vector<float> p{1.0f, 2.0f}, g{1.0f};
    CHECK_THROWS_AS(s.step(std::span<float>(p), std::span<const float>(g), "p"), ContractError);

    AdamStateT<float> s2;
    std::vector<float> p2{1.0f}, g2{std::numeric_limits<float>::quiet_NaN()};
    CHECK_THROWS_AS(s2.step(std::span<float>(p2), std::span<const float>(g2), "w"), NumericError);

    // Moment size locked after first use.
    AdamStateT<float> s3;
    std::vector<float> p3{1.0f}, g3{1.0f};
    s3.step(std::span<float>(p3), std::span<const float>(g3), "p");
    std::vector<float> p4{1.0f, 2.0f}, g4{1.0f, 1.0f};
    CHECK_THROWS_AS(s3.step(std::span<float>(p4), std::span<const float>(g4), "p"), ContractError);
}

#ifdef _OPENMP
TEST_CASE("conv results do not depend on thread count") {
    std::mt19937_64 rng(17);
    const Tensor x = random_tensor<float>(2, 4, 9, 7, rng, 0.0f, 1.0f);
    const ConvLayer l = random_layer<float>(5, 4, false, rng);
    const Tensor r = random_tensor<float>(2, 5, 9, 7, rng, -1.0f, 1.0f);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Tensor y1 = conv2d_forward(x, l);
    const ConvGradsT<float> g1 = conv2d_backward(x, l, r);
    omp_set_num_threads(4);
    const Tensor y4 = conv2d_forward(x, l);
    const ConvGradsT<float> g4 = conv2d_backward(x, l, r);
    omp_set_num_threads(saved);

    CHECK(max_abs_diff(y1, y4) == 0.0f);
    CHECK(max_abs_diff(g1.input, g4.input) == 0.0f);
    CHECK(max_abs_diff(g1.weights, g4.weights) == 0.0f);
    CHECK(g1.bias == g4.bias);
}
#endif

} // TEST_SUITE

#include "subpel/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "subpel/conv.hpp"
#include "subpel/errors.hpp"

namespace subpel {

ModelGrads compute_gradients(const GvtcnnModel& model, const Tensor& x,
                             const std::vector<Tensor>& targets) {
    const std::size_t head_count = model.heads.size();
    if (targets.size() != head_count) {
        throw ConfigError("got " + std::to_string(targets.size()) + " target tensors for " +
                          std::to_string(head_count) + " heads");
    }

    ForwardTrace trace;
    const std::vector<Tensor> outputs = forward_traced(model, x, trace);

    ModelGrads g;
    const int last = static_cast<int>(model.trunk.size()) - 1;
    g.trunk_weights.reserve(model.trunk.size());
    g.trunk_bias.reserve(model.trunk.size());
    g.head_weights.reserve(head_count);
    g.head_bias.reserve(head_count);

    // Loss: mean over heads of sum((pred - y)^2) / (n * elements-per-patch).
    // mse_loss supplies the 1/n part; the rest is a constant factor.
    const float elem_scale =
        1.0f / (static_cast<float>(x.h()) * static_cast<float>(x.w()) * static_cast<float>(x.c()));
    const float head_scale = 1.0f / static_cast<float>(head_count);

    float total_loss = 0.0f;
    Tensor d_shared = Tensor::zeros_like(trace.shared);
    for (std::size_t j = 0; j < head_count; ++j) {
        require_same_shape(outputs[j], targets[j], "training target");
        MseResultT<float> mse = mse_loss(outputs[j], targets[j]);
        total_loss += mse.loss * elem_scale * head_scale;
        // output = input + residual, so d residual = d output
        float* gd = mse.grad.data();
        for (std::size_t i = 0; i < mse.grad.size(); ++i) gd[i] *= elem_scale * head_scale;
        ConvGradsT<float> hg = conv2d_backward(trace.shared, model.heads[j], mse.grad);
        g.head_weights.push_back(std::move(hg.weights));
        g.head_bias.push_back(std::move(hg.bias));
        const float* hi = hg.input.data();
        float* ds = d_shared.data();
        for (std::size_t i = 0; i < d_shared.size(); ++i) ds[i] += hi[i];
    }
    g.loss = total_loss;

    // shared = PReLU(post[0] + pre[last], skip_slope)
    PreluGradsT<float> sp = prelu_backward(trace.skip_sum, model.skip_slope, d_shared);
    g.skip_slope = sp.a;

    // Both addends of the skip sum receive sp.x: pre[last] directly, post[0]
    // once layer 2's input gradient is also in.
    ConvGradsT<float> lg = conv2d_backward(trace.post[last - 1], model.trunk[last], sp.x);
    std::vector<Tensor> trunk_w(model.trunk.size());
    std::vector<std::vector<float>> trunk_b(model.trunk.size());
    g.trunk_slopes.assign(model.trunk.size() - 1, 0.0f);
    trunk_w[last] = std::move(lg.weights);
    trunk_b[last] = std::move(lg.bias);

    Tensor d_post = std::move(lg.input);  // gradient w.r.t. post[i] while walking down
    for (int i = last - 1; i >= 1; --i) {
        PreluGradsT<float> pg = prelu_backward(trace.pre[i], model.trunk[i].prelu_slope, d_post);
        g.trunk_slopes[i] = pg.a;
        ConvGradsT<float> cg = conv2d_backward(trace.post[i - 1], model.trunk[i], pg.x);
        trunk_w[i] = std::move(cg.weights);
        trunk_b[i] = std::move(cg.bias);
        d_post = std::move(cg.input);
        if (i == 1) {
            // post[0] also feeds the skip sum
            const float* sk = sp.x.data();
            float* dp = d_post.data();
            for (std::size_t k = 0; k < d_post.size(); ++k) dp[k] += sk[k];
        }
    }
    PreluGradsT<float> pg0 = prelu_backward(trace.pre[0], model.trunk[0].prelu_slope, d_post);
    g.trunk_slopes[0] = pg0.a;
    ConvGradsT<float> cg0 = conv2d_backward(x, model.trunk[0], pg0.x);
    trunk_w[0] = std::move(cg0.weights);
    trunk_b[0] = std::move(cg0.bias);

    g.trunk_weights = std::move(trunk_w);
    g.trunk_bias = std::move(trunk_b);
    return g;
}

namespace {

// Adam states for every parameter tensor, in a fixed update order.
struct OptimizerStates {
    std::vector<AdamState> trunk_w, trunk_b;
    std::vector<AdamState> trunk_slope;
    AdamState skip_slope;
    std::vector<AdamState> head_w, head_b;

    explicit OptimizerStates(const GvtcnnModel& m) {
        trunk_w.resize(m.trunk.size());
        trunk_b.resize(m.trunk.size());
        trunk_slope.resize(m.trunk.size() - 1);
        head_w.resize(m.heads.size());
        head_b.resize(m.heads.size());
    }

    void set_lr(float lr) {
        for (auto* group : {&trunk_w, &trunk_b, &trunk_slope, &head_w, &head_b})
            for (AdamState& s : *group) s.hyper.lr = lr;
        skip_slope.hyper.lr = lr;
    }

    void apply(GvtcnnModel& m, ModelGrads& g) {
        for (std::size_t i = 0; i < m.trunk.size(); ++i) {
            const std::string tag = "trunk layer " + std::to_string(i + 1);
            trunk_w[i].step(m.trunk[i].weights.flat(), g.trunk_weights[i].flat(), tag + " weights");
            trunk_b[i].step({m.trunk[i].bias.data(), m.trunk[i].bias.size()},
                            {g.trunk_bias[i].data(), g.trunk_bias[i].size()}, tag + " bias");
            if (i < m.trunk.size() - 1) {
                trunk_slope[i].step({&m.trunk[i].prelu_slope, 1}, {&g.trunk_slopes[i], 1},
                                    tag + " slope");
            }
        }
        skip_slope.step({&m.skip_slope, 1}, {&g.skip_slope, 1}, "skip slope");
        for (std::size_t j = 0; j < m.heads.size(); ++j) {
            const std::string tag = "head " + std::to_string(j);
            head_w[j].step(m.heads[j].weights.flat(), g.head_weights[j].flat(), tag + " weights");
            head_b[j].step({m.heads[j].bias.data(), m.heads[j].bias.size()},
                           {g.head_bias[j].data(), g.head_bias[j].size()}, tag + " bias");
        }
    }
};

void fill_batch(const Dataset& ds, const std::vector<std::size_t>& indices, Tensor& x,
                std::vector<Tensor>& targets) {
    const int heads = ds.head_count();
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const SamplePair& pair = ds.pairs[indices[b]];
        float* xp = x.plane(static_cast<int>(b), 0);
        for (int i = 0; i < kPatchBytes; ++i) xp[i] = static_cast<float>(pair.x[i]) / 255.0f;
        for (int t = 0; t < heads; ++t) {
            float* tp = targets[t].plane(static_cast<int>(b), 0);
            const std::uint8_t* src = pair.targets.data() + static_cast<std::size_t>(t) * kPatchBytes;
            for (int i = 0; i < kPatchBytes; ++i) tp[i] = static_cast<float>(src[i]) / 255.0f;
        }
    }
}

} // namespace

std::vector<LossRecord> train(GvtcnnModel& model, const Dataset& dataset, const TrainConfig& tc) {
    if (dataset.variant != model.config.variant) {
        throw ConfigError(std::string("dataset variant ") + variant_name(dataset.variant) +
                          " does not match model variant " + variant_name(model.config.variant));
    }
    if (dataset.head_count() != static_cast<int>(model.heads.size())) {
        throw ConfigError("dataset has " + std::to_string(dataset.head_count()) +
                          " targets per pair, model has " + std::to_string(model.heads.size()) +
                          " heads");
    }
    if (dataset.pairs.empty()) throw ConfigError("empty dataset");
    if (tc.batch_size < 1 || tc.total_iterations < 1 || tc.lr_drop_iteration < 1 ||
        tc.patch_size < 1 || tc.stride < 1) {
        throw ConfigError("training config values must be positive");
    }
    if (!(tc.lr_drop_factor > 0.0f) || tc.lr_initial < 0.0f) {
        throw ConfigError("bad learning rate settings");
    }

    const std::size_t n_pairs = dataset.pairs.size();
    const int heads = dataset.head_count();

    std::mt19937_64 rng(tc.seed);
    std::vector<std::size_t> order(n_pairs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    OptimizerStates opt(model);
    Tensor x(tc.batch_size, 1, kPatchSize, kPatchSize);
    std::vector<Tensor> targets(heads, Tensor(tc.batch_size, 1, kPatchSize, kPatchSize));
    std::vector<std::size_t> batch(tc.batch_size);

    std::vector<LossRecord> curve;
    curve.reserve(tc.total_iterations);

    for (int iter = 1; iter <= tc.total_iterations; ++iter) {
        const float lr =
            iter <= tc.lr_drop_iteration ? tc.lr_initial : tc.lr_initial / tc.lr_drop_factor;
        opt.set_lr(lr);

        for (int b = 0; b < tc.batch_size; ++b) {
            if (cursor == n_pairs) {  // next epoch
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            batch[b] = order[cursor++];
        }
        fill_batch(dataset, batch, x, targets);

        ModelGrads g = compute_gradients(model, x, targets);
        if (!std::isfinite(g.loss)) {
            throw NumericError("training diverged: non-finite loss at iteration " +
                               std::to_string(iter));
        }
        opt.apply(model, g);
        curve.push_back(LossRecord{iter, g.loss, lr});
    }
    return curve;
}

} // namespace subpel

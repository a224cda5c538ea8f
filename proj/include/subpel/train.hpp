#ifndef SUBPEL_TRAIN_HPP
#define SUBPEL_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "subpel/datagen.hpp"
#include "subpel/gvtcnn.hpp"

namespace subpel {

struct TrainConfig {
    int patch_size = kPatchSize;
    int stride = kPatchStride;
    int batch_size = 128;
    float lr_initial = 1e-4f;
    int lr_drop_iteration = 30000;  // last iteration at the initial rate
    float lr_drop_factor = 10.0f;
    int total_iterations = 50000;
    std::uint64_t seed = 0;
};

// Loss and learning rate at one training iteration (1-based).
struct LossRecord {
    int iteration = 0;
    float loss = 0.0f;
    float lr = 0.0f;
};

// Gradients of the mean per-head, per-element MSE with respect to every
// model parameter, mirroring GvtcnnModel's layout.
struct ModelGrads {
    std::vector<Tensor> trunk_weights;
    std::vector<std::vector<float>> trunk_bias;
    std::vector<float> trunk_slopes;  // layers 1..9
    float skip_slope = 0.0f;
    std::vector<Tensor> head_weights;
    std::vector<std::vector<float>> head_bias;
    float loss = 0.0f;
};

// One forward/backward pass over a batch. x is (n, 1, h, w) in [0,1];
// targets holds head_count tensors of the same shape. The loss is the mean
// over heads of sum((pred - y)^2) / (n * h * w).
ModelGrads compute_gradients(const GvtcnnModel& model, const Tensor& x,
                             const std::vector<Tensor>& targets);

// Trains in place: shuffled minibatch epochs, Adam per parameter tensor,
// learning rate dropped by lr_drop_factor after lr_drop_iteration. Returns
// the per-iteration loss curve. Deterministic for a fixed seed in
// single-threaded mode. Throws ConfigError on a variant/head mismatch and
// NumericError (with the iteration index) if the loss goes non-finite.
std::vector<LossRecord> train(GvtcnnModel& model, const Dataset& dataset,
                              const TrainConfig& tc);

} // namespace subpel

#endif

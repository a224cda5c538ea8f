#ifndef SUBPEL_GVTCNN_HPP
#define SUBPEL_GVTCNN_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "subpel/conv.hpp"
#include "subpel/plane.hpp"
#include "subpel/position.hpp"
#include "subpel/tensor.hpp"

namespace subpel {

enum class Variant : std::uint8_t { H = 0, Q = 1 };

inline const char* variant_name(Variant v) { return v == Variant::H ? "H" : "Q"; }

// The QP values models are trained for. Other QPs use the nearest listed
// value, ties toward the smaller one.
inline constexpr std::array<int, 4> kModelQps = {22, 27, 32, 37};
int nearest_model_qp(int qp);

struct GvtcnnConfig {
    Variant variant = Variant::H;
    int qp_tag = 37;
    int wide_channels = 48;
    int narrow_channels = 10;
    int narrow_layer_count = 8;

    int head_count() const { return variant == Variant::H ? 3 : 12; }

    // Head j infers the sample at positions()[j].
    std::span<const FracPos> positions() const {
        if (variant == Variant::H) return half_positions();
        return quarter_positions();
    }
};

// Trunk: layer 1 lifts the input to the wide feature map, eight narrow
// layers follow, layer 10 widens again. Layers 1..9 each apply PReLU;
// layer 10 has no activation of its own — its output is added to layer 1's
// activated output and the sum goes through one more PReLU (skip_slope) to
// form the shared feature map. Each head is a single wide->1 convolution
// with no activation; its output is the residual added to the input plane.
struct GvtcnnModel {
    GvtcnnConfig config;
    std::vector<ConvLayer> trunk;   // 10 layers; [0..8] carry PReLU slopes
    float skip_slope = 0.25f;
    std::vector<ConvLayer> heads;   // head_count layers, wide -> 1

    struct ParamCount {
        std::size_t weights_and_biases = 0;
        int prelu_slopes = 0;
    };
    ParamCount parameter_count() const;
    int conv_layer_count() const { return static_cast<int>(trunk.size() + heads.size()); }
};

// Deterministic seeded construction; weights use He-style scaling adjusted
// for the initial PReLU slope of 0.25, biases start at zero.
GvtcnnModel build_model(const GvtcnnConfig& config, std::uint64_t seed);

// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    std::vector<Tensor> pre;        // trunk pre-activation outputs, one per layer
    std::vector<Tensor> post;       // activated outputs of trunk layers 1..9
    Tensor skip_sum;                // post[0] + pre[9]
    Tensor shared;                  // PReLU(skip_sum, skip_slope)
    std::vector<Tensor> residuals;  // head conv outputs
};

// Runs the network on a normalized plane batch (n, 1, h, w) in [0,1].
// Output j = input + residual of head j; outputs are not clamped here.
// Throws NumericError naming the layer if activations go non-finite.
std::vector<Tensor> forward(const GvtcnnModel& model, const Tensor& integer_plane);

// Forward pass that also returns the intermediates for backpropagation.
std::vector<Tensor> forward_traced(const GvtcnnModel& model, const Tensor& integer_plane,
                                   ForwardTrace& trace);

// Full-plane inference: normalize to [0,1], forward, clamp to [0,1], then
// re-quantize to 8 bits rounding half away from zero.
std::vector<Plane> infer_plane(const GvtcnnModel& model, const Plane& plane);

// GVTW weight file, little-endian: magic "GVTW", version u32, variant u8,
// qp_tag u16, layer count u16, then per layer out_ch u16, in_ch u16, kh u8,
// kw u8, row-major f32 weights, f32 biases, slope-present u8 (+ f32 slope).
// Layer 10's slope slot stores the skip activation slope. A CRC32 of the
// payload trails the file.
void save_weights(const GvtcnnModel& model, const std::filesystem::path& path);
GvtcnnModel load_weights(const std::filesystem::path& path,
                         std::optional<Variant> expect_variant = std::nullopt);

bool models_identical(const GvtcnnModel& a, const GvtcnnModel& b);

} // namespace subpel

#endif

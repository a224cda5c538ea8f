#ifndef SUBPEL_DATAGEN_HPP
#define SUBPEL_DATAGEN_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "subpel/gvtcnn.hpp"
#include "subpel/plane.hpp"

namespace subpel {

// Training patches are fixed at 32x32, cut on a 16-pixel grid.
inline constexpr int kPatchSize = 32;
inline constexpr int kPatchStride = 16;
inline constexpr int kPatchBytes = kPatchSize * kPatchSize;

// 3x3 Gaussian kernel on offsets {-1,0,1}^2, row-major, normalized to sum 1.
std::array<double, 9> gaussian_kernel(double stddev);

// 2-D correlation with replicate boundary; result stays in double precision
// until sampling.
PlaneF blur(const Plane& plane, const std::array<double, 9>& kernel);

// Output of one sampling pass: the integer-position plane taken from the raw
// image plus the sub-pixel target planes taken from the blurred image, in
// canonical position order. Blurred values are rounded to 8 bits here.
struct SampledPlanes {
    Plane integer;
    std::vector<Plane> targets;
};

// 2x2 sampling: integer = raw[2r][2c]; targets f2, f8, f10 come from the
// blurred plane at the other three in-patch offsets. Dimensions must be even.
SampledPlanes sample_half(const Plane& raw, const PlaneF& blurred);

// 4x4 sampling: integer = raw[4r][4c]; the 12 quarter-pel targets come from
// the blurred plane at every in-patch offset whose row or column is odd.
// Dimensions must be divisible by 4.
SampledPlanes sample_quarter(const Plane& raw, const PlaneF& blurred);

// Stand-in for coding the integer-position sample: 8x8 orthonormal block DCT,
// uniform quantization with Qstep = 2^((qp-4)/6), inverse transform, clamp.
// Partial border blocks are padded by edge replication. qp must be in [0,51].
Plane reconstruction_proxy(const Plane& plane, int qp);

// One training example: a degraded 32x32 integer-position patch and the
// co-located clean target patches, one per head, in canonical order.
struct SamplePair {
    std::array<std::uint8_t, kPatchBytes> x;
    std::vector<std::uint8_t> targets;  // head_count * kPatchBytes
};

struct Dataset {
    Variant variant = Variant::H;
    int qp = 37;
    std::vector<SamplePair> pairs;

    int head_count() const { return variant == Variant::H ? 3 : 12; }
};

struct StdRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Blur strengths: [0.5, 0.6] for the half-pel variant, [0.7, 0.8] for the
// quarter-pel variant.
StdRange default_std_range(Variant variant);

// Full synthesis pipeline. Per corpus image: draw a blur std from the range
// (one draw per image, all drawn up front in corpus order), blur, sample by
// variant, degrade the integer plane only, then cut aligned 32x32 patches
// with stride 16 at identical coordinates from the integer plane and every
// target plane. Images are cropped to the sampling grid first.
Dataset make_dataset(const std::vector<Plane>& corpus, Variant variant, int qp,
                     std::uint64_t seed, std::optional<StdRange> std_range = std::nullopt);

// Dataset file, little-endian: magic "GVTD", version u32, variant u8, qp u16,
// pair count u32, then per pair the x patch (1024 bytes) followed by the
// target patches (head_count x 1024 bytes).
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace subpel

#endif

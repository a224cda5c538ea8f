#ifndef SUBPEL_MCSIM_HPP
#define SUBPEL_MCSIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "subpel/dctif.hpp"
#include "subpel/gvtcnn.hpp"
#include "subpel/plane.hpp"

namespace subpel {

// Displacement from a block's position to its reference position, in
// quarter-pel units. A target that is the reference shifted right by one pel
// therefore gets mv.x = -4.
struct MotionVector {
    int x = 0;
    int y = 0;

    bool operator==(const MotionVector&) const = default;
};

enum class SelectionMode { dctif_only, gvtcnn_only, per_block_best };

const char* selection_mode_name(SelectionMode mode);

struct SimConfig {
    int block_size = 16;
    int search_range = 16;         // integer pels
    double lambda = 4.0;           // weight of the bit proxy in the block cost
    SelectionMode selection_mode = SelectionMode::per_block_best;
    int qp = 37;
};

enum class FilterChoice : std::uint8_t { dctif = 0, gvtcnn = 1 };

// Outcome for one block: where it was predicted from and what it cost.
struct BlockDecision {
    MotionVector mv;
    long long sad = 0;
    FilterChoice filter = FilterChoice::dctif;
    double cost = 0.0;             // sad + lambda * (mv bits + 1 flag bit)
};

struct FrameReport {
    int frame_index = 0;           // index of the predicted frame
    double psnr = 0.0;
    double mean_sad = 0.0;
    double bits_proxy = 0.0;       // mv bits + flag bits over all blocks
    int blocks_dctif = 0;
    int blocks_gvtcnn = 0;
    std::vector<BlockDecision> blocks;  // raster order; not serialized to CSV
};

struct McReport {
    std::vector<FrameReport> frames;
    double mean_psnr = 0.0;
    double mean_sad = 0.0;
    double mean_bits = 0.0;
    long long total_dctif = 0;
    long long total_gvtcnn = 0;
};

// Code length of one signed value under an exponential-Golomb signed code;
// the bit proxy for a motion vector is the sum over both components.
int exp_golomb_bits(int v);
int mv_bits(MotionVector mv);

// Exhaustive integer-pel search over displacements in [-range, range]^2,
// clipped so the reference block stays inside the plane. Minimum SAD wins;
// ties go to smaller |dy|, then |dx|, then scan order. The returned vector
// is in quarter-pel units (multiples of 4).
struct SearchHit {
    MotionVector mv;
    long long sad = 0;
};
SearchHit full_search_integer(const Plane& target, int bx, int by, int bw, int bh,
                              const Plane& reference, int range);

// Evaluates the 16 quarter-pel offsets (fy, fx) in {0..3}^2 on top of an
// integer-pel vector, reading fractional samples from the interpolated plane
// set. The zero offset is included, so the result never loses to the integer
// search. Ties keep the first candidate in (fy, fx) scan order.
SearchHit fractional_refine(const Plane& target, int bx, int by, int bw, int bh,
                            const Plane& integer_ref, const InterpPlaneSet& planes,
                            MotionVector mv_int);

// Per-block choice between the two filters by cost = sad + lambda * bits,
// ties preferring DCTIF. Returns the chosen decisions.
std::vector<BlockDecision> select_per_block(const std::vector<BlockDecision>& dctif,
                                            const std::vector<BlockDecision>& gvtcnn,
                                            double lambda);

// Runs motion-compensated prediction of every frame t >= 1 from frame t-1.
// The reference is first degraded with the reconstruction proxy at cfg.qp.
// DCTIF planes come from interpolate_all; GVTCNN planes come from the half
// model (f2, f8, f10) and the quarter model (the other 12), both inferring
// directly from the degraded integer plane. Model pointers may be null in
// dctif_only mode.
McReport simulate(const std::vector<Plane>& frames, const GvtcnnModel* model_h,
                  const GvtcnnModel* model_q, const SimConfig& cfg);

// CSV serialization: one row per frame, then an aggregate row. Columns:
// frame,psnr_db,mean_sad,bits_proxy,blocks_dctif,blocks_gvtcnn.
std::string report_to_csv(const McReport& report);

} // namespace subpel

#endif

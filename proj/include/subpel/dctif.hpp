#ifndef SUBPEL_DCTIF_HPP
#define SUBPEL_DCTIF_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "subpel/plane.hpp"
#include "subpel/position.hpp"

namespace subpel {

// HEVC luma interpolation filter taps (normative coefficients from the HEVC
// specification, Table 8-11). Each phase sums to 64; results are normalized
// by a 6-bit shift. The 3/4-phase filter is the reverse of the 1/4-phase
// filter. `offset` is the source index of the first tap relative to the
// anchor integer sample.
struct DctifPhase {
    const std::int16_t* taps;
    int count;
    int offset;
};

struct FilterBank {
    static constexpr std::array<std::int16_t, 8> half = {-1, 4, -11, 40, 40, -11, 4, -1};
    static constexpr std::array<std::int16_t, 7> quarter_a = {-1, 4, -10, 58, 17, -5, 1};
    static constexpr std::array<std::int16_t, 7> quarter_c = {1, -5, 17, 58, -10, 4, -1};
    static constexpr int norm_shift = 6;

    // phase in quarter-pel units: 1 -> 1/4, 2 -> 1/2, 3 -> 3/4.
    static DctifPhase phase(int frac);
};

// All 15 fractional-position planes for one source plane, indexed by
// FracPos::index() - 1 in canonical order.
struct InterpPlaneSet {
    std::vector<Plane> planes;

    const Plane& at(FracPos pos) const { return planes[pos.index() - 1]; }
    Plane& at(FracPos pos) { return planes[pos.index() - 1]; }
};

// Interpolates one fractional position with the two-stage HEVC integer
// arithmetic: horizontal filtering at intermediate precision without
// clamping, then vertical filtering, final (v + 32) >> 6 rounding and a
// clamp to [0,255]. Source borders are edge-replicated.
Plane interpolate_position(const Plane& src, FracPos pos);

// All 15 positions. Shares the horizontal intermediates across positions
// with equal fx; bit-identical to per-position calls.
InterpPlaneSet interpolate_all(const Plane& src);

} // namespace subpel

#endif

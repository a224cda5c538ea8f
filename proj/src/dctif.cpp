#include "subpel/dctif.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "subpel/errors.hpp"

namespace subpel {

DctifPhase FilterBank::phase(int frac) {
    switch (frac) {
        case 1: return {quarter_a.data(), 7, -3};
        case 2: return {half.data(), 8, -3};
        case 3: return {quarter_c.data(), 7, -2};
        default: throw ContractError("DCTIF phase must be 1..3, got " + std::to_string(frac));
    }
}

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline std::uint8_t clip_pixel(int v) {
    return static_cast<std::uint8_t>(clampi(v, 0, 255));
}

void require_size(const Plane& src) {
    if (src.width < 8 || src.height < 8) {
        throw DataError("interpolation source must be at least 8x8, got " +
                        std::to_string(src.width) + "x" + std::to_string(src.height));
    }
}

// Stage-1 horizontal filtering of every source row at intermediate
// precision (no rounding, no clamp). Border columns replicate the source.
std::vector<std::int32_t> horizontal_stage(const Plane& src, const DctifPhase& ph) {
    const int w = src.width, h = src.height;
    std::vector<std::int32_t> t(static_cast<std::size_t>(w) * h);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* srow = src.row(y);
        std::int32_t* trow = t.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            std::int32_t acc = 0;
            for (int k = 0; k < ph.count; ++k)
                acc += ph.taps[k] * srow[clampi(x + ph.offset + k, 0, w - 1)];
            trow[x] = acc;
        }
    }
    return t;
}

void finish_horizontal(const std::vector<std::int32_t>& t, Plane& out) {
    const int w = out.width, h = out.height;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y) {
        const std::int32_t* trow = t.data() + static_cast<std::size_t>(y) * w;
        std::uint8_t* orow = out.row(y);
        for (int x = 0; x < w; ++x) orow[x] = clip_pixel((trow[x] + 32) >> 6);
    }
}

void vertical_on_source(const Plane& src, const DctifPhase& ph, Plane& out) {
    const int w = src.width, h = src.height;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y) {
        std::uint8_t* orow = out.row(y);
        for (int x = 0; x < w; ++x) {
            std::int32_t acc = 0;
            for (int k = 0; k < ph.count; ++k)
                acc += ph.taps[k] * src.at(clampi(y + ph.offset + k, 0, h - 1), x);
            orow[x] = clip_pixel((acc + 32) >> 6);
        }
    }
}

// Stage-2 vertical filtering over horizontal intermediates: >> 6 without a
// rounding offset (arithmetic shift), then the final rounded normalization.
void vertical_on_intermediate(const std::vector<std::int32_t>& t, int w, int h,
                              const DctifPhase& ph, Plane& out) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y) {
        std::uint8_t* orow = out.row(y);
        for (int x = 0; x < w; ++x) {
            std::int32_t acc = 0;
            for (int k = 0; k < ph.count; ++k) {
                const int sy = clampi(y + ph.offset + k, 0, h - 1);
                acc += ph.taps[k] * t[static_cast<std::size_t>(sy) * w + x];
            }
            acc >>= FilterBank::norm_shift;
            orow[x] = clip_pixel((acc + 32) >> 6);
        }
    }
}

} // namespace

Plane interpolate_position(const Plane& src, FracPos pos) {
    require_size(src);
    Plane out(src.width, src.height);
    if (pos.fy == 0) {
        auto t = horizontal_stage(src, FilterBank::phase(pos.fx));
        finish_horizontal(t, out);
    } else if (pos.fx == 0) {
        vertical_on_source(src, FilterBank::phase(pos.fy), out);
    } else {
        auto t = horizontal_stage(src, FilterBank::phase(pos.fx));
        vertical_on_intermediate(t, src.width, src.height, FilterBank::phase(pos.fy), out);
    }
    return out;
}

InterpPlaneSet interpolate_all(const Plane& src) {
    require_size(src);
    InterpPlaneSet set;
    set.planes.assign(15, Plane(src.width, src.height));
    for (int fx = 0; fx <= 3; ++fx) {
        std::vector<std::int32_t> t;
        if (fx > 0) t = horizontal_stage(src, FilterBank::phase(fx));
        for (int fy = 0; fy <= 3; ++fy) {
            if (fx == 0 && fy == 0) continue;
            Plane& out = set.at(FracPos{fx, fy});
            if (fy == 0) {
                finish_horizontal(t, out);
            } else if (fx == 0) {
                vertical_on_source(src, FilterBank::phase(fy), out);
            } else {
                vertical_on_intermediate(t, src.width, src.height, FilterBank::phase(fy), out);
            }
        }
    }
    return set;
}

} // namespace subpel

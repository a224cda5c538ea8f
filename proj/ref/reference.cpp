#include "reference.hpp"

#include <algorithm>
#include <cstdlib>

#include "subpel/errors.hpp"

namespace subpel::ref {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Independent copy of the HEVC luma tap tables, aligned per phase.
// taps[k] multiplies the source sample at anchor + first + k.
struct Taps {
    int first;
    int count;
    int taps[8];
};

Taps taps_for(int frac) {
    switch (frac) {
        case 1: return {-3, 7, {-1, 4, -10, 58, 17, -5, 1, 0}};
        case 2: return {-3, 8, {-1, 4, -11, 40, 40, -11, 4, -1}};
        case 3: return {-2, 7, {1, -5, 17, 58, -10, 4, -1, 0}};
        default: throw ContractError("bad fractional phase");
    }
}

// Horizontal intermediate for one pixel, at un-normalized precision.
std::int32_t hfilter_at(const Plane& src, int y, int x, const Taps& t) {
    std::int32_t acc = 0;
    for (int k = 0; k < t.count; ++k)
        acc += t.taps[k] * src.at(y, clampi(x + t.first + k, 0, src.width - 1));
    return acc;
}

} // namespace

PlaneF blur(const Plane& src, const double kernel[9]) {
    PlaneF out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int ky = -1; ky <= 1; ++ky) {
                for (int kx = -1; kx <= 1; ++kx) {
                    const int sy = clampi(y + ky, 0, src.height - 1);
                    const int sx = clampi(x + kx, 0, src.width - 1);
                    acc += kernel[(ky + 1) * 3 + (kx + 1)] * src.at(sy, sx);
                }
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

Plane interpolate_position(const Plane& src, FracPos pos) {
    const int w = src.width, h = src.height;
    Plane out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int32_t v;
            if (pos.fy == 0) {
                v = hfilter_at(src, y, x, taps_for(pos.fx));
            } else if (pos.fx == 0) {
                const Taps t = taps_for(pos.fy);
                std::int32_t acc = 0;
                for (int k = 0; k < t.count; ++k)
                    acc += t.taps[k] * src.at(clampi(y + t.first + k, 0, h - 1), x);
                v = acc;
            } else {
                const Taps th = taps_for(pos.fx);
                const Taps tv = taps_for(pos.fy);
                std::int32_t acc = 0;
                for (int k = 0; k < tv.count; ++k) {
                    const int sy = clampi(y + tv.first + k, 0, h - 1);
                    acc += tv.taps[k] * hfilter_at(src, sy, x, th);
                }
                v = acc >> 6;
            }
            v = (v + 32) >> 6;
            out.at(y, x) = static_cast<std::uint8_t>(clampi(v, 0, 255));
        }
    }
    return out;
}

SearchResult full_search(const Plane& target, int bx, int by, int bw, int bh,
                         const Plane& reference, int range) {
    struct Candidate {
        int mvx, mvy;
        long long sad;
        int order;
    };
    std::vector<Candidate> candidates;
    int order = 0;
    for (int cy = std::max(0, by - range); cy <= std::min(reference.height - bh, by + range); ++cy) {
        for (int cx = std::max(0, bx - range); cx <= std::min(reference.width - bw, bx + range); ++cx) {
            long long sad = 0;
            for (int y = 0; y < bh; ++y)
                for (int x = 0; x < bw; ++x)
                    sad += std::abs(static_cast<int>(target.at(by + y, bx + x)) -
                                    static_cast<int>(reference.at(cy + y, cx + x)));
            candidates.push_back({cx - bx, cy - by, sad, order++});
        }
    }
    if (candidates.empty()) throw DataError("full_search: empty search window");
    auto best = std::min_element(candidates.begin(), candidates.end(),
                                 [](const Candidate& a, const Candidate& b) {
                                     if (a.sad != b.sad) return a.sad < b.sad;
                                     if (std::abs(a.mvy) != std::abs(b.mvy))
                                         return std::abs(a.mvy) < std::abs(b.mvy);
                                     if (std::abs(a.mvx) != std::abs(b.mvx))
                                         return std::abs(a.mvx) < std::abs(b.mvx);
                                     return a.order < b.order;
                                 });
    return {best->mvx, best->mvy, best->sad};
}

} // namespace subpel::ref

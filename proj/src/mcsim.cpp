#include "subpel/mcsim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "subpel/datagen.hpp"
#include "subpel/errors.hpp"

namespace subpel {

const char* selection_mode_name(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::dctif_only: return "dctif_only";
        case SelectionMode::gvtcnn_only: return "gvtcnn_only";
        default: return "per_block_best";
    }
}

int exp_golomb_bits(int v) {
    // signed mapping: 0 -> 0, 1 -> 1, -1 -> 2, 2 -> 3, ...
    const unsigned code = v > 0 ? 2u * static_cast<unsigned>(v) - 1
                                : 2u * static_cast<unsigned>(-static_cast<long long>(v));
    int bits = 1;
    unsigned span = 1;       // count of codes of the current length
    unsigned first = 0;      // first code of the current length
    while (code >= first + span) {
        first += span;
        span *= 2;
        bits += 2;
    }
    return bits;
}

int mv_bits(MotionVector mv) { return exp_golomb_bits(mv.x) + exp_golomb_bits(mv.y); }

namespace {

long long block_sad(const Plane& target, int tx, int ty, int bw, int bh, const Plane& ref,
                    int rx, int ry) {
    long long sad = 0;
    for (int y = 0; y < bh; ++y) {
        const std::uint8_t* trow = target.row(ty + y) + tx;
        const std::uint8_t* rrow = ref.row(ry + y) + rx;
        for (int x = 0; x < bw; ++x) sad += std::abs(int(trow[x]) - int(rrow[x]));
    }
    return sad;
}

} // namespace

SearchHit full_search_integer(const Plane& target, int bx, int by, int bw, int bh,
                              const Plane& reference, int range) {
    if (bw < 1 || bh < 1 || bx < 0 || by < 0 || bx + bw > target.width ||
        by + bh > target.height) {
        throw ContractError("search block out of the target plane");
    }
    const int dy_lo = std::max(-range, -by);
    const int dy_hi = std::min(range, reference.height - bh - by);
    const int dx_lo = std::max(-range, -bx);
    const int dx_hi = std::min(range, reference.width - bw - bx);
    if (dy_lo > dy_hi || dx_lo > dx_hi) {
        throw DataError("empty search window for block at (" + std::to_string(bx) + "," +
                        std::to_string(by) + ")");
    }
    long long best_sad = std::numeric_limits<long long>::max();
    int best_dx = 0, best_dy = 0;
    for (int dy = dy_lo; dy <= dy_hi; ++dy) {
        for (int dx = dx_lo; dx <= dx_hi; ++dx) {
            const long long sad = block_sad(target, bx, by, bw, bh, reference, bx + dx, by + dy);
            if (sad < best_sad ||
                (sad == best_sad && (std::abs(dy) < std::abs(best_dy) ||
                                     (std::abs(dy) == std::abs(best_dy) &&
                                      std::abs(dx) < std::abs(best_dx))))) {
                best_sad = sad;
                best_dx = dx;
                best_dy = dy;
            }
        }
    }
    return SearchHit{MotionVector{best_dx * 4, best_dy * 4}, best_sad};
}

SearchHit fractional_refine(const Plane& target, int bx, int by, int bw, int bh,
                            const Plane& integer_ref, const InterpPlaneSet& planes,
                            MotionVector mv_int) {
    if (mv_int.x % 4 != 0 || mv_int.y % 4 != 0) {
        throw ContractError("fractional refinement needs an integer-pel starting vector");
    }
    const int rx = bx + mv_int.x / 4;
    const int ry = by + mv_int.y / 4;
    if (rx < 0 || ry < 0 || rx + bw > integer_ref.width || ry + bh > integer_ref.height) {
        throw DataError("reference block out of plane at integer vector (" +
                        std::to_string(mv_int.x) + "," + std::to_string(mv_int.y) + ")");
    }
    long long best_sad = std::numeric_limits<long long>::max();
    int best_fx = 0, best_fy = 0;
    for (int fy = 0; fy < 4; ++fy) {
        for (int fx = 0; fx < 4; ++fx) {
            const Plane& p =
                (fx == 0 && fy == 0) ? integer_ref : planes.at(FracPos{fx, fy});
            const long long sad = block_sad(target, bx, by, bw, bh, p, rx, ry);
            if (sad < best_sad) {
                best_sad = sad;
                best_fx = fx;
                best_fy = fy;
            }
        }
    }
    return SearchHit{MotionVector{mv_int.x + best_fx, mv_int.y + best_fy}, best_sad};
}

std::vector<BlockDecision> select_per_block(const std::vector<BlockDecision>& dctif,
                                            const std::vector<BlockDecision>& gvtcnn,
                                            double lambda) {
    if (dctif.size() != gvtcnn.size()) {
        throw ContractError("per-block cost lists differ in length: " +
                            std::to_string(dctif.size()) + " vs " + std::to_string(gvtcnn.size()));
    }
    (void)lambda;  // costs are precomputed with the caller's lambda
    std::vector<BlockDecision> chosen;
    chosen.reserve(dctif.size());
    for (std::size_t i = 0; i < dctif.size(); ++i) {
        chosen.push_back(dctif[i].cost <= gvtcnn[i].cost ? dctif[i] : gvtcnn[i]);
    }
    return chosen;
}

namespace {

struct BlockRect {
    int x, y, w, h;
};

void decompose_pel(int mv_quarter, int& pel, int& frac) {
    pel = mv_quarter >= 0 ? mv_quarter / 4 : -((-mv_quarter + 3) / 4);
    frac = mv_quarter - 4 * pel;
}

InterpPlaneSet gvtcnn_planes(const GvtcnnModel& model_h, const GvtcnnModel& model_q,
                             const Plane& ref) {
    InterpPlaneSet set;
    set.planes.assign(15, Plane());
    std::vector<Plane> half = infer_plane(model_h, ref);
    for (std::size_t j = 0; j < half.size(); ++j)
        set.at(half_positions()[j]) = std::move(half[j]);
    std::vector<Plane> quarter = infer_plane(model_q, ref);
    for (std::size_t j = 0; j < quarter.size(); ++j)
        set.at(quarter_positions()[j]) = std::move(quarter[j]);
    return set;
}

void paste_block(Plane& prediction, const BlockRect& r, const BlockDecision& d,
                 const Plane& integer_ref, const InterpPlaneSet& planes) {
    int px, fx, py, fy;
    decompose_pel(d.mv.x, px, fx);
    decompose_pel(d.mv.y, py, fy);
    const Plane& src = (fx == 0 && fy == 0) ? integer_ref : planes.at(FracPos{fx, fy});
    for (int y = 0; y < r.h; ++y) {
        const std::uint8_t* srow = src.row(r.y + py + y) + (r.x + px);
        std::uint8_t* drow = prediction.row(r.y + y) + r.x;
        for (int x = 0; x < r.w; ++x) drow[x] = srow[x];
    }
}

} // namespace

McReport simulate(const std::vector<Plane>& frames, const GvtcnnModel* model_h,
                  const GvtcnnModel* model_q, const SimConfig& cfg) {
    if (frames.size() < 2) throw DataError("simulation needs at least 2 frames");
    const int w = frames[0].width, h = frames[0].height;
    for (std::size_t t = 1; t < frames.size(); ++t) {
        if (frames[t].width != w || frames[t].height != h) {
            throw DataError("frame " + std::to_string(t) + " size " +
                            std::to_string(frames[t].width) + "x" +
                            std::to_string(frames[t].height) + " differs from frame 0 (" +
                            std::to_string(w) + "x" + std::to_string(h) + ")");
        }
    }
    if (cfg.block_size < 1 || cfg.search_range < 0 || cfg.lambda < 0.0) {
        throw ConfigError("bad simulation config: block_size >= 1, search_range >= 0, "
                          "lambda >= 0 required");
    }
    if (cfg.qp < 0 || cfg.qp > 51) {
        throw ConfigError("simulation qp must be in [0,51], got " + std::to_string(cfg.qp));
    }
    const bool need_dctif = cfg.selection_mode != SelectionMode::gvtcnn_only;
    const bool need_gvt = cfg.selection_mode != SelectionMode::dctif_only;
    if (need_gvt) {
        if (model_h == nullptr || model_q == nullptr) {
            throw ConfigError(std::string("selection mode ") +
                              selection_mode_name(cfg.selection_mode) +
                              " needs both half-pel and quarter-pel models");
        }
        const int want = nearest_model_qp(cfg.qp);
        for (const GvtcnnModel* m : {model_h, model_q}) {
            if (m->config.qp_tag != want) {
                throw ConfigError("model qp tag " + std::to_string(m->config.qp_tag) +
                                  " does not match simulation qp " + std::to_string(cfg.qp) +
                                  " (expects tag " + std::to_string(want) + ")");
            }
        }
        if (model_h->config.variant != Variant::H || model_q->config.variant != Variant::Q) {
            throw ConfigError("model variants are swapped or wrong");
        }
    }

    std::vector<BlockRect> rects;
    for (int y = 0; y < h; y += cfg.block_size)
        for (int x = 0; x < w; x += cfg.block_size)
            rects.push_back(BlockRect{x, y, std::min(cfg.block_size, w - x),
                                      std::min(cfg.block_size, h - y)});
    const int n_blocks = static_cast<int>(rects.size());

    McReport report;
    for (std::size_t t = 1; t < frames.size(); ++t) {
        const Plane& target = frames[t];
        const Plane ref = reconstruction_proxy(frames[t - 1], cfg.qp);
        InterpPlaneSet dctif_set, gvt_set;
        if (need_dctif) dctif_set = interpolate_all(ref);
        if (need_gvt) gvt_set = gvtcnn_planes(*model_h, *model_q, ref);

        std::vector<BlockDecision> dec_dctif(need_dctif ? n_blocks : 0);
        std::vector<BlockDecision> dec_gvt(need_gvt ? n_blocks : 0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int b = 0; b < n_blocks; ++b) {
            const BlockRect& r = rects[b];
            const SearchHit integer =
                full_search_integer(target, r.x, r.y, r.w, r.h, ref, cfg.search_range);
            if (need_dctif) {
                const SearchHit hit = fractional_refine(target, r.x, r.y, r.w, r.h, ref,
                                                        dctif_set, integer.mv);
                dec_dctif[b] = BlockDecision{
                    hit.mv, hit.sad, FilterChoice::dctif,
                    static_cast<double>(hit.sad) + cfg.lambda * (mv_bits(hit.mv) + 1)};
            }
            if (need_gvt) {
                const SearchHit hit = fractional_refine(target, r.x, r.y, r.w, r.h, ref,
                                                        gvt_set, integer.mv);
                dec_gvt[b] = BlockDecision{
                    hit.mv, hit.sad, FilterChoice::gvtcnn,
                    static_cast<double>(hit.sad) + cfg.lambda * (mv_bits(hit.mv) + 1)};
            }
        }

        FrameReport fr;
        fr.frame_index = static_cast<int>(t);
        switch (cfg.selection_mode) {
            case SelectionMode::dctif_only: fr.blocks = std::move(dec_dctif); break;
            case SelectionMode::gvtcnn_only: fr.blocks = std::move(dec_gvt); break;
            default: fr.blocks = select_per_block(dec_dctif, dec_gvt, cfg.lambda); break;
        }

        Plane prediction(w, h);
        long long sad_sum = 0;
        double bits_sum = 0.0;
        for (int b = 0; b < n_blocks; ++b) {
            const BlockDecision& d = fr.blocks[b];
            const InterpPlaneSet& set =
                d.filter == FilterChoice::dctif ? dctif_set : gvt_set;
            paste_block(prediction, rects[b], d, ref, set);
            sad_sum += d.sad;
            bits_sum += mv_bits(d.mv) + 1;
            if (d.filter == FilterChoice::dctif) ++fr.blocks_dctif;
            else ++fr.blocks_gvtcnn;
        }
        fr.psnr = psnr(prediction, target);
        fr.mean_sad = static_cast<double>(sad_sum) / n_blocks;
        fr.bits_proxy = bits_sum;
        report.frames.push_back(std::move(fr));
    }

    for (const FrameReport& fr : report.frames) {
        report.mean_psnr += fr.psnr;
        report.mean_sad += fr.mean_sad;
        report.mean_bits += fr.bits_proxy;
        report.total_dctif += fr.blocks_dctif;
        report.total_gvtcnn += fr.blocks_gvtcnn;
    }
    const double nf = static_cast<double>(report.frames.size());
    report.mean_psnr /= nf;
    report.mean_sad /= nf;
    report.mean_bits /= nf;
    return report;
}

namespace {

std::string fmt_db(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

std::string report_to_csv(const McReport& report) {
    std::string csv = "frame,psnr_db,mean_sad,bits_proxy,blocks_dctif,blocks_gvtcnn\n";
    char buf[256];
    for (const FrameReport& fr : report.frames) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.4f,%.1f,%d,%d\n", fr.frame_index,
                      fmt_db(fr.psnr).c_str(), fr.mean_sad, fr.bits_proxy, fr.blocks_dctif,
                      fr.blocks_gvtcnn);
        csv += buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%s,%.4f,%.1f,%lld,%lld\n", fmt_db(report.mean_psnr).c_str(),
                  report.mean_sad, report.mean_bits, report.total_dctif, report.total_gvtcnn);
    csv += buf;
    return csv;
}

} // namespace subpel

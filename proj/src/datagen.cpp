#include "subpel/datagen.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "subpel/errors.hpp"

namespace subpel {

std::array<double, 9> gaussian_kernel(double stddev) {
    if (!(stddev > 0.0)) {
        throw ContractError("gaussian kernel std must be > 0, got " + std::to_string(stddev));
    }
    std::array<double, 9> k{};
    double sum = 0.0;
    for (int v = -1; v <= 1; ++v) {
        for (int u = -1; u <= 1; ++u) {
            const double e = std::exp(-(u * u + v * v) / (2.0 * stddev * stddev));
            k[(v + 1) * 3 + (u + 1)] = e;
            sum += e;
        }
    }
    for (double& e : k) e /= sum;
    return k;
}

PlaneF blur(const Plane& plane, const std::array<double, 9>& kernel) {
    const int h = plane.height, w = plane.width;
    PlaneF out(w, h);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int v = -1; v <= 1; ++v) {
                int sy = y + v;
                sy = sy < 0 ? 0 : (sy >= h ? h - 1 : sy);
                const std::uint8_t* srow = plane.row(sy);
                for (int u = -1; u <= 1; ++u) {
                    int sx = x + u;
                    sx = sx < 0 ? 0 : (sx >= w ? w - 1 : sx);
                    acc += kernel[(v + 1) * 3 + (u + 1)] * srow[sx];
                }
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

namespace {

std::uint8_t round8(double v) {
    v = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
    return static_cast<std::uint8_t>(std::lround(v));
}

void require_same_dims(const Plane& raw, const PlaneF& blurred) {
    if (raw.width != blurred.width || raw.height != blurred.height) {
        throw ContractError("raw and blurred dimensions differ: " + std::to_string(raw.width) +
                            "x" + std::to_string(raw.height) + " vs " +
                            std::to_string(blurred.width) + "x" + std::to_string(blurred.height));
    }
}

} // namespace

SampledPlanes sample_half(const Plane& raw, const PlaneF& blurred) {
    require_same_dims(raw, blurred);
    if (raw.width % 2 != 0 || raw.height % 2 != 0) {
        throw DataError("half-pel sampling needs even dimensions, got " +
                        std::to_string(raw.width) + "x" + std::to_string(raw.height));
    }
    const int oh = raw.height / 2, ow = raw.width / 2;
    SampledPlanes s;
    s.integer = Plane(ow, oh);
    s.targets.assign(3, Plane(ow, oh));
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            s.integer.at(r, c) = raw.at(2 * r, 2 * c);
            s.targets[0].at(r, c) = round8(blurred.at(2 * r, 2 * c + 1));      // f2
            s.targets[1].at(r, c) = round8(blurred.at(2 * r + 1, 2 * c));      // f8
            s.targets[2].at(r, c) = round8(blurred.at(2 * r + 1, 2 * c + 1));  // f10
        }
    }
    return s;
}

SampledPlanes sample_quarter(const Plane& raw, const PlaneF& blurred) {
    require_same_dims(raw, blurred);
    if (raw.width % 4 != 0 || raw.height % 4 != 0) {
        throw DataError("quarter-pel sampling needs dimensions divisible by 4, got " +
                        std::to_string(raw.width) + "x" + std::to_string(raw.height));
    }
    const int oh = raw.height / 4, ow = raw.width / 4;
    SampledPlanes s;
    s.integer = Plane(ow, oh);
    s.targets.assign(12, Plane(ow, oh));
    const auto& positions = quarter_positions();
    for (int r = 0; r < oh; ++r) {
        for (int c = 0; c < ow; ++c) {
            s.integer.at(r, c) = raw.at(4 * r, 4 * c);
            for (std::size_t t = 0; t < positions.size(); ++t) {
                const FracPos p = positions[t];
                s.targets[t].at(r, c) = round8(blurred.at(4 * r + p.fy, 4 * c + p.fx));
            }
        }
    }
    return s;
}

namespace {

// 8x8 orthonormal DCT-II basis, basis[u][y] = a_u cos((2y+1) u pi / 16).
const std::array<std::array<double, 8>, 8>& dct_basis() {
    static const std::array<std::array<double, 8>, 8> b = [] {
        std::array<std::array<double, 8>, 8> m{};
        const double pi = std::acos(-1.0);
        for (int u = 0; u < 8; ++u) {
            const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int y = 0; y < 8; ++y) m[u][y] = a * std::cos((2 * y + 1) * u * pi / 16.0);
        }
        return m;
    }();
    return b;
}

double round_half_away(double v) {
    return v < 0.0 ? std::ceil(v - 0.5) : std::floor(v + 0.5);
}

} // namespace

Plane reconstruction_proxy(const Plane& plane, int qp) {
    if (qp < 0 || qp > 51) {
        throw ContractError("qp must be in [0,51], got " + std::to_string(qp));
    }
    const double qstep = std::pow(2.0, (qp - 4) / 6.0);
    const auto& basis = dct_basis();
    const int h = plane.height, w = plane.width;
    Plane out(w, h);

    const int by_count = (h + 7) / 8, bx_count = (w + 7) / 8;
#ifdef _OPENMP
#pragma omp parallel for collapse(2) schedule(static)
#endif
    for (int by = 0; by < by_count; ++by) {
        for (int bx = 0; bx < bx_count; ++bx) {
            // gather the block, replicating edges for partial border blocks
            double block[8][8];
            for (int y = 0; y < 8; ++y) {
                int sy = by * 8 + y;
                sy = sy >= h ? h - 1 : sy;
                for (int x = 0; x < 8; ++x) {
                    int sx = bx * 8 + x;
                    sx = sx >= w ? w - 1 : sx;
                    block[y][x] = plane.at(sy, sx);
                }
            }
            // forward transform: rows then columns
            double tmp[8][8], coef[8][8];
            for (int y = 0; y < 8; ++y)
                for (int u = 0; u < 8; ++u) {
                    double acc = 0.0;
                    for (int x = 0; x < 8; ++x) acc += basis[u][x] * block[y][x];
                    tmp[y][u] = acc;
                }
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int y = 0; y < 8; ++y) acc += basis[v][y] * tmp[y][u];
                    coef[v][u] = round_half_away(acc / qstep) * qstep;
                }
            // inverse transform: columns then rows
            for (int u = 0; u < 8; ++u)
                for (int y = 0; y < 8; ++y) {
                    double acc = 0.0;
                    for (int v = 0; v < 8; ++v) acc += basis[v][y] * coef[v][u];
                    tmp[y][u] = acc;
                }
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) {
                    double acc = 0.0;
                    for (int u = 0; u < 8; ++u) acc += basis[u][x] * tmp[y][u];
                    block[y][x] = acc;
                }
            for (int y = 0; y < 8 && by * 8 + y < h; ++y)
                for (int x = 0; x < 8 && bx * 8 + x < w; ++x)
                    out.at(by * 8 + y, bx * 8 + x) = round8(block[y][x]);
        }
    }
    return out;
}

StdRange default_std_range(Variant variant) {
    return variant == Variant::H ? StdRange{0.5, 0.6} : StdRange{0.7, 0.8};
}

Dataset make_dataset(const std::vector<Plane>& corpus, Variant variant, int qp,
                     std::uint64_t seed, std::optional<StdRange> std_range) {
    if (corpus.empty()) throw DataError("empty corpus");
    const StdRange range = std_range.value_or(default_std_range(variant));
    if (!(range.lo > 0.0) || range.hi < range.lo) {
        throw ContractError("bad blur std range [" + std::to_string(range.lo) + "," +
                            std::to_string(range.hi) + "]");
    }

    // One std per image, all drawn up front so the draw sequence depends only
    // on the corpus order.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(range.lo, range.hi);
    std::vector<double> stds(corpus.size());
    for (double& s : stds) s = dist(rng);

    const int factor = variant == Variant::H ? 2 : 4;
    Dataset ds;
    ds.variant = variant;
    ds.qp = qp;

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Plane& src = corpus[i];
        if (src.width < 8 || src.height < 8) {
            throw DataError("corpus image " + std::to_string(i) + " is smaller than 8x8");
        }
        // crop to the sampling grid
        const int cw = src.width - src.width % factor;
        const int ch = src.height - src.height % factor;
        Plane cropped(cw, ch);
        for (int y = 0; y < ch; ++y)
            std::memcpy(cropped.row(y), src.row(y), static_cast<std::size_t>(cw));

        const PlaneF blurred = blur(cropped, gaussian_kernel(stds[i]));
        const SampledPlanes sampled = variant == Variant::H ? sample_half(cropped, blurred)
                                                            : sample_quarter(cropped, blurred);
        const Plane degraded = reconstruction_proxy(sampled.integer, qp);

        const int ih = degraded.height, iw = degraded.width;
        for (int y0 = 0; y0 + kPatchSize <= ih; y0 += kPatchStride) {
            for (int x0 = 0; x0 + kPatchSize <= iw; x0 += kPatchStride) {
                SamplePair pair;
                for (int y = 0; y < kPatchSize; ++y)
                    std::memcpy(pair.x.data() + y * kPatchSize, degraded.row(y0 + y) + x0,
                                kPatchSize);
                pair.targets.resize(sampled.targets.size() * kPatchBytes);
                for (std::size_t t = 0; t < sampled.targets.size(); ++t)
                    for (int y = 0; y < kPatchSize; ++y)
                        std::memcpy(pair.targets.data() + t * kPatchBytes + y * kPatchSize,
                                    sampled.targets[t].row(y0 + y) + x0, kPatchSize);
                ds.pairs.push_back(std::move(pair));
            }
        }
    }
    if (ds.pairs.empty()) {
        throw DataError("corpus yielded zero 32x32 patches (images too small for variant " +
                        std::string(variant_name(variant)) + ")");
    }
    return ds;
}

namespace {
constexpr char kDatasetMagic[4] = {'G', 'V', 'T', 'D'};
constexpr std::uint32_t kDatasetVersion = 1;
} // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open dataset file for writing: " + path.string());
    auto put = [&out](const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    put(kDatasetMagic, 4);
    put(&kDatasetVersion, 4);
    const std::uint8_t variant = static_cast<std::uint8_t>(dataset.variant);
    const std::uint16_t qp = static_cast<std::uint16_t>(dataset.qp);
    const std::uint32_t count = static_cast<std::uint32_t>(dataset.pairs.size());
    put(&variant, 1);
    put(&qp, 2);
    put(&count, 4);
    const std::size_t target_bytes = static_cast<std::size_t>(dataset.head_count()) * kPatchBytes;
    for (const SamplePair& pair : dataset.pairs) {
        if (pair.targets.size() != target_bytes) {
            throw ContractError("sample pair has " + std::to_string(pair.targets.size()) +
                                " target bytes, expected " + std::to_string(target_bytes));
        }
        put(pair.x.data(), pair.x.size());
        put(pair.targets.data(), pair.targets.size());
    }
    if (!out) throw DataError("failed writing dataset file: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto need = [&](std::size_t n, const char* what) {
        if (pos + n > buf.size()) {
            throw FormatError(std::string("dataset file truncated while reading ") + what, pos);
        }
    };
    need(4, "magic");
    if (std::memcmp(buf.data(), kDatasetMagic, 4) != 0) {
        throw FormatError("bad magic in " + path.string() + ", expected GVTD", 0);
    }
    pos = 4;
    std::uint32_t version;
    need(4, "version");
    std::memcpy(&version, buf.data() + pos, 4);
    pos += 4;
    if (version != kDatasetVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version), 4);
    }
    need(1, "variant");
    const std::uint8_t variant_byte = buf[pos++];
    if (variant_byte > 1) {
        throw FormatError("bad variant byte " + std::to_string(variant_byte), pos - 1);
    }
    Dataset ds;
    ds.variant = static_cast<Variant>(variant_byte);
    std::uint16_t qp;
    need(2, "qp");
    std::memcpy(&qp, buf.data() + pos, 2);
    pos += 2;
    if (qp > 51) throw FormatError("qp " + std::to_string(qp) + " out of [0,51]", pos - 2);
    ds.qp = qp;
    std::uint32_t count;
    need(4, "pair count");
    std::memcpy(&count, buf.data() + pos, 4);
    pos += 4;

    const std::size_t target_bytes = static_cast<std::size_t>(ds.head_count()) * kPatchBytes;
    ds.pairs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        SamplePair pair;
        need(kPatchBytes, "x patch");
        std::memcpy(pair.x.data(), buf.data() + pos, kPatchBytes);
        pos += kPatchBytes;
        need(target_bytes, "target patches");
        pair.targets.assign(buf.data() + pos, buf.data() + pos + target_bytes);
        pos += target_bytes;
        ds.pairs.push_back(std::move(pair));
    }
    if (pos != buf.size()) {
        throw FormatError("trailing bytes after last pair", pos);
    }
    return ds;
}

} // namespace subpel

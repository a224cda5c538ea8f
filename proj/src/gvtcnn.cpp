#include "subpel/gvtcnn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <zlib.h>

#include "subpel/errors.hpp"

namespace subpel {

int nearest_model_qp(int qp) {
    int best = kModelQps[0];
    int best_dist = std::abs(qp - best);
    for (int tag : kModelQps) {
        const int d = std::abs(qp - tag);
        if (d < best_dist || (d == best_dist && tag < best)) {
            best = tag;
            best_dist = d;
        }
    }
    return best;
}

namespace {

void validate_config(const GvtcnnConfig& c) {
    bool listed = false;
    for (int tag : kModelQps) listed |= (tag == c.qp_tag);
    if (!listed) {
        throw ContractError("qp_tag must be one of {22,27,32,37}, got " +
                            std::to_string(c.qp_tag) + "; map other QPs with nearest_model_qp");
    }
    if (c.wide_channels < 1 || c.narrow_channels < 1 || c.narrow_layer_count < 1) {
        throw ContractError("channel counts and layer count must be positive");
    }
}

void he_init(ConvLayer& layer, std::mt19937_64& rng, float slope) {
    const float fan_in = static_cast<float>(layer.in_ch() * 9);
    const float stddev = std::sqrt(2.0f / ((1.0f + slope * slope) * fan_in));
    std::normal_distribution<float> dist(0.0f, stddev);
    for (float& w : layer.weights.flat()) w = dist(rng);
    // biases stay zero
}

std::string trunk_layer_name(int i) { return "trunk layer " + std::to_string(i + 1); }

} // namespace

GvtcnnModel::ParamCount GvtcnnModel::parameter_count() const {
    ParamCount pc;
    for (const ConvLayer& l : trunk) {
        pc.weights_and_biases += l.weights.size() + l.bias.size();
        if (l.has_prelu) ++pc.prelu_slopes;
    }
    ++pc.prelu_slopes; // skip activation
    for (const ConvLayer& l : heads) {
        pc.weights_and_biases += l.weights.size() + l.bias.size();
    }
    return pc;
}

GvtcnnModel build_model(const GvtcnnConfig& config, std::uint64_t seed) {
    validate_config(config);
    const float init_slope = 0.25f;
    std::mt19937_64 rng(seed);

    GvtcnnModel m;
    m.config = config;
    m.skip_slope = init_slope;

    const int wide = config.wide_channels;
    const int narrow = config.narrow_channels;

    m.trunk.reserve(config.narrow_layer_count + 2);
    m.trunk.push_back(ConvLayer::make(wide, 1, true, init_slope));
    for (int i = 0; i < config.narrow_layer_count; ++i) {
        const int in = i == 0 ? wide : narrow;
        m.trunk.push_back(ConvLayer::make(narrow, in, true, init_slope));
    }
    m.trunk.push_back(ConvLayer::make(wide, narrow, false));

    m.heads.reserve(static_cast<std::size_t>(config.head_count()));
    for (int j = 0; j < config.head_count(); ++j) {
        m.heads.push_back(ConvLayer::make(1, wide, false));
    }

    for (ConvLayer& l : m.trunk) he_init(l, rng, init_slope);
    for (ConvLayer& l : m.heads) he_init(l, rng, init_slope);
    return m;
}

namespace {

void check_finite(const Tensor& t, const std::string& where) {
    if (!t.all_finite()) throw NumericError("non-finite activations after " + where);
}

} // namespace

std::vector<Tensor> forward_traced(const GvtcnnModel& model, const Tensor& input,
                                   ForwardTrace& trace) {
    if (input.c() != 1) {
        throw ContractError("forward: input must have 1 channel, got " + std::to_string(input.c()));
    }
    const int last = static_cast<int>(model.trunk.size()) - 1;

    trace.pre.clear();
    trace.post.clear();
    trace.pre.reserve(model.trunk.size());
    trace.post.reserve(model.trunk.size() - 1);

    const Tensor* cur = &input;
    for (int i = 0; i <= last; ++i) {
        trace.pre.push_back(conv2d_forward(*cur, model.trunk[i]));
        check_finite(trace.pre.back(), trunk_layer_name(i));
        if (i < last) {
            trace.post.push_back(prelu_forward(trace.pre.back(), model.trunk[i].prelu_slope));
            cur = &trace.post.back();
        }
    }

    // Residual skip: layer 1's activated output plus layer 10's raw output,
    // then one shared PReLU.
    trace.skip_sum = trace.pre.back();
    {
        const float* f1 = trace.post.front().data();
        float* s = trace.skip_sum.data();
        for (std::size_t i = 0; i < trace.skip_sum.size(); ++i) s[i] += f1[i];
    }
    trace.shared = prelu_forward(trace.skip_sum, model.skip_slope);
    check_finite(trace.shared, "shared feature map");

    trace.residuals.clear();
    trace.residuals.reserve(model.heads.size());
    std::vector<Tensor> outputs;
    outputs.reserve(model.heads.size());
    for (std::size_t j = 0; j < model.heads.size(); ++j) {
        trace.residuals.push_back(conv2d_forward(trace.shared, model.heads[j]));
        check_finite(trace.residuals.back(), "head " + std::to_string(j));
        Tensor out = trace.residuals.back();
        const float* in = input.data();
        float* o = out.data();
        for (std::size_t i = 0; i < out.size(); ++i) o[i] += in[i];
        outputs.push_back(std::move(out));
    }
    return outputs;
}

std::vector<Tensor> forward(const GvtcnnModel& model, const Tensor& integer_plane) {
    ForwardTrace trace;
    return forward_traced(model, integer_plane, trace);
}

std::vector<Plane> infer_plane(const GvtcnnModel& model, const Plane& plane) {
    if (plane.width < 2 || plane.height < 2) {
        throw DataError("inference plane must be at least 2x2, got " +
                        std::to_string(plane.width) + "x" + std::to_string(plane.height));
    }
    Tensor in(1, 1, plane.height, plane.width);
    float* d = in.data();
    for (std::size_t i = 0; i < plane.samples.size(); ++i)
        d[i] = static_cast<float>(plane.samples[i]) / 255.0f;

    std::vector<Tensor> outs = forward(model, in);

    std::vector<Plane> result;
    result.reserve(outs.size());
    for (const Tensor& t : outs) {
        Plane p(plane.width, plane.height);
        const float* s = t.data();
        for (std::size_t i = 0; i < p.samples.size(); ++i) {
            float v = s[i];
            v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
            // round half away from zero
            p.samples[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
        result.push_back(std::move(p));
    }
    return result;
}

// ---- GVTW serialization ----

namespace {

constexpr char kMagic[4] = {'G', 'V', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
}

template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
    put_bytes(buf, &v, sizeof(T));
}

void put_layer(std::vector<std::uint8_t>& buf, const ConvLayer& l, bool slope_present,
               float slope) {
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(l.out_ch()));
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(l.in_ch()));
    put<std::uint8_t>(buf, 3);
    put<std::uint8_t>(buf, 3);
    put_bytes(buf, l.weights.data(), l.weights.size() * sizeof(float));
    put_bytes(buf, l.bias.data(), l.bias.size() * sizeof(float));
    put<std::uint8_t>(buf, slope_present ? 1 : 0);
    if (slope_present) put<float>(buf, slope);
}

struct Reader {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) {
        if (pos + n > buf.size()) {
            throw FormatError(std::string("weight file truncated while reading ") + what, pos);
        }
    }
    template <class T>
    T get(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    void get_floats(float* dst, std::size_t count, const char* what) {
        need(count * sizeof(float), what);
        std::memcpy(dst, buf.data() + pos, count * sizeof(float));
        pos += count * sizeof(float);
    }
};

std::uint32_t payload_crc(const std::vector<std::uint8_t>& buf, std::size_t begin,
                          std::size_t end) {
    return static_cast<std::uint32_t>(
        crc32(0L, buf.data() + begin, static_cast<uInt>(end - begin)));
}

} // namespace

void save_weights(const GvtcnnModel& model, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf;
    put_bytes(buf, kMagic, 4);
    put<std::uint32_t>(buf, kVersion);
    put<std::uint8_t>(buf, static_cast<std::uint8_t>(model.config.variant));
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(model.config.qp_tag));
    put<std::uint16_t>(buf, static_cast<std::uint16_t>(model.conv_layer_count()));

    const int last = static_cast<int>(model.trunk.size()) - 1;
    for (int i = 0; i <= last; ++i) {
        const ConvLayer& l = model.trunk[i];
        // layer 10's slope slot carries the skip activation slope
        const bool present = i == last ? true : l.has_prelu;
        const float slope = i == last ? model.skip_slope : l.prelu_slope;
        put_layer(buf, l, present, slope);
    }
    for (const ConvLayer& l : model.heads) put_layer(buf, l, false, 0.0f);

    put<std::uint32_t>(buf, payload_crc(buf, 4, buf.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open weight file for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("failed writing weight file: " + path.string());
}

GvtcnnModel load_weights(const std::filesystem::path& path, std::optional<Variant> expect_variant) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open weight file: " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    Reader r{buf};
    r.need(4, "magic");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw FormatError("bad magic in " + path.string() + ", expected GVTW", 0);
    }
    r.pos = 4;
    const auto version = r.get<std::uint32_t>("version");
    if (version != kVersion) {
        throw FormatError("unsupported weight format version " + std::to_string(version), 4);
    }
    const auto variant_byte = r.get<std::uint8_t>("variant");
    if (variant_byte > 1) throw FormatError("bad variant byte " + std::to_string(variant_byte), r.pos - 1);
    const Variant variant = static_cast<Variant>(variant_byte);
    if (expect_variant && variant != *expect_variant) {
        throw ConfigError(std::string("weight file ") + path.string() + " holds variant " +
                          variant_name(variant) + ", expected " + variant_name(*expect_variant));
    }
    const auto qp_tag = r.get<std::uint16_t>("qp_tag");
    const auto layer_count = r.get<std::uint16_t>("layer count");

    // checksum first, so corrupted shape fields are reported as such
    if (buf.size() < r.pos + sizeof(std::uint32_t)) {
        throw FormatError("weight file truncated before checksum", buf.size());
    }
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
    if (payload_crc(buf, 4, buf.size() - 4) != stored_crc) {
        throw FormatError("payload checksum mismatch in " + path.string(), buf.size() - 4);
    }

    GvtcnnConfig config;
    config.variant = variant;
    config.qp_tag = qp_tag;
    {
        bool listed = false;
        for (int tag : kModelQps) listed |= (tag == config.qp_tag);
        if (!listed) {
            throw FormatError("qp_tag " + std::to_string(config.qp_tag) +
                              " is not one of {22,27,32,37}", 9);
        }
    }
    const int expected_layers = 2 + config.narrow_layer_count + config.head_count();
    if (layer_count != expected_layers) {
        throw FormatError("layer count " + std::to_string(layer_count) + " does not match " +
                          variant_name(variant) + "-variant architecture (" +
                          std::to_string(expected_layers) + ")", 11);
    }

    GvtcnnModel m;
    m.config = config;
    const int trunk_layers = 2 + config.narrow_layer_count;

    for (int i = 0; i < layer_count; ++i) {
        const std::size_t layer_off = r.pos;
        const auto out_ch = r.get<std::uint16_t>("out_ch");
        const auto in_ch = r.get<std::uint16_t>("in_ch");
        const auto kh = r.get<std::uint8_t>("kh");
        const auto kw = r.get<std::uint8_t>("kw");
        if (kh != 3 || kw != 3 || out_ch == 0 || in_ch == 0) {
            throw FormatError("bad layer shape " + std::to_string(out_ch) + "x" +
                              std::to_string(in_ch) + "x" + std::to_string(kh) + "x" +
                              std::to_string(kw) + " in layer " + std::to_string(i), layer_off);
        }
        ConvLayer l = ConvLayer::make(out_ch, in_ch, false);
        r.get_floats(l.weights.data(), l.weights.size(), "weights");
        r.get_floats(l.bias.data(), l.bias.size(), "biases");
        const auto slope_flag = r.get<std::uint8_t>("slope flag");
        float slope = 0.0f;
        if (slope_flag == 1) {
            slope = r.get<float>("slope");
        } else if (slope_flag != 0) {
            throw FormatError("bad slope flag " + std::to_string(slope_flag), r.pos - 1);
        }

        const bool is_trunk = i < trunk_layers;
        const bool is_last_trunk = i == trunk_layers - 1;
        const int expect_out = !is_trunk ? 1
                               : (i == 0 || is_last_trunk) ? config.wide_channels
                                                           : config.narrow_channels;
        const int expect_in = i == 0                  ? 1
                              : i == 1                ? config.wide_channels
                              : is_trunk              ? config.narrow_channels
                                                      : config.wide_channels;
        if (out_ch != expect_out || in_ch != expect_in) {
            throw FormatError("layer " + std::to_string(i) + " shape " + std::to_string(out_ch) +
                              "<-" + std::to_string(in_ch) + " does not match architecture (" +
                              std::to_string(expect_out) + "<-" + std::to_string(expect_in) + ")",
                              layer_off);
        }
        if (is_trunk) {
            if (is_last_trunk) {
                if (slope_flag != 1) {
                    throw FormatError("missing skip activation slope on last trunk layer", layer_off);
                }
                m.skip_slope = slope;
            } else {
                if (slope_flag != 1) {
                    throw FormatError("missing PReLU slope on trunk layer " + std::to_string(i),
                                      layer_off);
                }
                l.has_prelu = true;
                l.prelu_slope = slope;
            }
            m.trunk.push_back(std::move(l));
        } else {
            if (slope_flag != 0) {
                throw FormatError("unexpected slope on head layer " + std::to_string(i), layer_off);
            }
            m.heads.push_back(std::move(l));
        }
    }
    if (r.pos != buf.size() - 4) {
        throw FormatError("trailing bytes after last layer", r.pos);
    }
    return m;
}

bool models_identical(const GvtcnnModel& a, const GvtcnnModel& b) {
    auto layers_equal = [](const ConvLayer& x, const ConvLayer& y) {
        if (x.out_ch() != y.out_ch() || x.in_ch() != y.in_ch()) return false;
        if (x.has_prelu != y.has_prelu) return false;
        if (x.has_prelu && std::memcmp(&x.prelu_slope, &y.prelu_slope, sizeof(float)) != 0)
            return false;
        if (std::memcmp(x.weights.data(), y.weights.data(), x.weights.size() * sizeof(float)) != 0)
            return false;
        return std::memcmp(x.bias.data(), y.bias.data(), x.bias.size() * sizeof(float)) == 0;
    };
    if (a.config.variant != b.config.variant || a.config.qp_tag != b.config.qp_tag) return false;
    if (a.trunk.size() != b.trunk.size() || a.heads.size() != b.heads.size()) return false;
    if (std::memcmp(&a.skip_slope, &b.skip_slope, sizeof(float)) != 0) return false;
    for (std::size_t i = 0; i < a.trunk.size(); ++i)
        if (!layers_equal(a.trunk[i], b.trunk[i])) return false;
    for (std::size_t i = 0; i < a.heads.size(); ++i)
        if (!layers_equal(a.heads[i], b.heads[i])) return false;
    return true;
}

} // namespace subpel

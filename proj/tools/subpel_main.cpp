// Command-line front end: gen-data, train, eval-interp, simulate.
// Exit codes: 0 success, 2 usage, 3 data/format/config error, 4 numeric.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "subpel/datagen.hpp"
#include "subpel/dctif.hpp"
#include "subpel/errors.hpp"
#include "subpel/gvtcnn.hpp"
#include "subpel/manifest.hpp"
#include "subpel/mcsim.hpp"
#include "subpel/plane.hpp"
#include "subpel/train.hpp"

namespace fs = std::filesystem;
using namespace subpel;

namespace {

// Bad argument combinations detected after CLI11 parsing; maps to exit 2.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CommonOpts {
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = library default
    std::string out_dir = ".";
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--seed", o.seed, "Seed for every random draw this command makes")
        ->capture_default_str();
    sub->add_option("--threads", o.threads,
                    "Worker thread count; 1 is the reproducibility reference mode, "
                    "0 keeps the runtime default")
        ->capture_default_str();
    sub->add_option("--out-dir", o.out_dir, "Directory for all output files")
        ->capture_default_str();
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

fs::path prepare_out_dir(const CommonOpts& o) {
    fs::path dir(o.out_dir);
    fs::create_directories(dir);
    return dir;
}

Variant parse_variant(const std::string& s) {
    if (s == "h" || s == "H") return Variant::H;
    if (s == "q" || s == "Q") return Variant::Q;
    throw UsageError("--variant must be h or q, got '" + s + "'");
}

// Source options shared by gen-data and eval-interp: a PGM directory or
// file, or a raw Y plane with explicit dimensions.
struct CorpusOpts {
    std::string corpus;  // directory of PGMs, or one .pgm file
    std::string raw;     // raw 8-bit Y plane
    int width = 0;
    int height = 0;
};

void add_corpus(CLI::App* sub, CorpusOpts& o) {
    sub->add_option("--corpus", o.corpus, "Directory of P5 PGM files, or a single PGM");
    sub->add_option("--raw", o.raw, "Raw 8-bit Y plane file (needs --width/--height)");
    sub->add_option("--width", o.width, "Raw plane width");
    sub->add_option("--height", o.height, "Raw plane height");
}

std::vector<Plane> load_corpus(const CorpusOpts& o, std::vector<ManifestInput>& inputs) {
    std::vector<Plane> planes;
    if (!o.corpus.empty()) {
        const fs::path path(o.corpus);
        std::vector<fs::path> files;
        if (fs::is_directory(path)) {
            files = list_pgm_files(path);
            if (files.empty()) throw DataError("no .pgm files in " + path.string());
        } else {
            files.push_back(path);
        }
        for (const fs::path& f : files) {
            planes.push_back(read_pgm(f));
            inputs.push_back({f.string(), file_crc32(f), fs::file_size(f)});
        }
    } else if (!o.raw.empty()) {
        if (o.width < 1 || o.height < 1) {
            throw UsageError("--raw needs positive --width and --height");
        }
        planes.push_back(read_raw_y(o.raw, o.width, o.height));
        inputs.push_back({o.raw, file_crc32(o.raw), fs::file_size(o.raw)});
    } else {
        throw UsageError("one of --corpus or --raw is required");
    }
    return planes;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

// ---- gen-data ----

struct GenOpts {
    CommonOpts common;
    CorpusOpts corpus;
    std::string variant;
    int qp = 0;
    double std_lo = 0.0, std_hi = 0.0;  // 0 = variant default
};

int run_gen_data(const GenOpts& o) {
    apply_threads(o.common.threads);
    const Variant variant = parse_variant(o.variant);

    std::optional<StdRange> range;
    if (o.std_lo > 0.0 || o.std_hi > 0.0) {
        if (!(o.std_lo > 0.0) || o.std_hi < o.std_lo) {
            throw UsageError("--std-lo/--std-hi must satisfy 0 < lo <= hi");
        }
        range = StdRange{o.std_lo, o.std_hi};
    }
    const StdRange resolved = range.value_or(default_std_range(variant));

    std::vector<ManifestInput> inputs;
    const std::vector<Plane> corpus = load_corpus(o.corpus, inputs);

    const Dataset ds = make_dataset(corpus, variant, o.qp, o.common.seed, range);

    const fs::path out_dir = prepare_out_dir(o.common);
    const fs::path ds_path = out_dir / "dataset.gvtd";
    save_dataset(ds, ds_path);

    RunManifest m;
    m.command = "gen-data";
    m.seed = o.common.seed;
    m.config = {{"variant", variant_name(variant)},
                {"qp", o.qp},
                {"std_lo", resolved.lo},
                {"std_hi", resolved.hi},
                {"patch_size", kPatchSize},
                {"stride", kPatchStride},
                {"threads", o.common.threads},
                {"out_dir", o.common.out_dir}};
    m.inputs = std::move(inputs);
    m.outputs = {"dataset.gvtd"};
    write_manifest(m, out_dir / "manifest.json");

    std::cout << "wrote " << ds_path.string() << ": " << ds.pairs.size() << " pairs\n";
    return 0;
}

// ---- train ----

struct TrainOpts {
    CommonOpts common;
    std::string dataset;
    std::string variant;
    TrainConfig tc;
};

std::string loss_csv(const std::vector<LossRecord>& curve) {
    std::string csv = "iteration,loss,lr\n";
    char buf[96];
    for (const LossRecord& r : curve) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", r.iteration, r.loss, r.lr);
        csv += buf;
    }
    return csv;
}

int run_train(const TrainOpts& o) {
    apply_threads(o.common.threads);
    const Variant variant = parse_variant(o.variant);

    const Dataset ds = load_dataset(o.dataset);
    if (ds.variant != variant) {
        throw ConfigError(std::string("dataset holds variant ") + variant_name(ds.variant) +
                          ", --variant requested " + variant_name(variant));
    }

    GvtcnnConfig config;
    config.variant = variant;
    config.qp_tag = nearest_model_qp(ds.qp);
    GvtcnnModel model = build_model(config, o.common.seed);

    TrainConfig tc = o.tc;
    tc.seed = o.common.seed;
    const std::vector<LossRecord> curve = train(model, ds, tc);

    const fs::path out_dir = prepare_out_dir(o.common);
    const std::string weights_name =
        std::string("model_") + (variant == Variant::H ? "h" : "q") + "_qp" +
        std::to_string(config.qp_tag) + ".gvtw";
    save_weights(model, out_dir / weights_name);
    write_text(out_dir / "loss.csv", loss_csv(curve));

    RunManifest m;
    m.command = "train";
    m.seed = o.common.seed;
    m.config = {{"variant", variant_name(variant)},
                {"qp_tag", config.qp_tag},
                {"dataset_qp", ds.qp},
                {"patch_size", tc.patch_size},
                {"stride", tc.stride},
                {"batch_size", tc.batch_size},
                {"lr_initial", tc.lr_initial},
                {"lr_drop_iteration", tc.lr_drop_iteration},
                {"lr_drop_factor", tc.lr_drop_factor},
                {"total_iterations", tc.total_iterations},
                {"threads", o.common.threads},
                {"out_dir", o.common.out_dir}};
    m.inputs = {{o.dataset, file_crc32(o.dataset), fs::file_size(o.dataset)}};
    m.outputs = {weights_name, "loss.csv"};
    write_manifest(m, out_dir / "manifest.json");

    std::printf("trained %s model on %zu pairs: %d iterations, final loss %.9g\n",
                variant_name(variant), ds.pairs.size(), tc.total_iterations,
                curve.empty() ? 0.0 : static_cast<double>(curve.back().loss));
    return 0;
}

// ---- eval-interp ----

struct EvalOpts {
    CommonOpts common;
    CorpusOpts corpus;
    std::string weights;
    int qp = -1;  // -1 = model's qp tag
    std::string train_manifest;
};

int run_eval_interp(const EvalOpts& o) {
    apply_threads(o.common.threads);

    const GvtcnnModel model = load_weights(o.weights);
    const Variant variant = model.config.variant;
    const int qp = o.qp >= 0 ? o.qp : model.config.qp_tag;
    if (qp > 51) throw UsageError("--qp must be in [0,51]");

    std::vector<ManifestInput> inputs;
    const std::vector<Plane> corpus = load_corpus(o.corpus, inputs);
    const std::vector<ManifestInput> corpus_inputs = inputs;  // before weights are appended
    inputs.push_back({o.weights, file_crc32(o.weights), fs::file_size(o.weights)});

    bool overlap = false;
    if (!o.train_manifest.empty()) {
        const std::vector<std::uint32_t> train_crcs = manifest_input_crcs(o.train_manifest);
        for (const ManifestInput& in : corpus_inputs) {
            for (std::uint32_t crc : train_crcs) overlap |= (crc == in.crc);
        }
        inputs.push_back({o.train_manifest, file_crc32(o.train_manifest),
                          fs::file_size(o.train_manifest)});
        if (overlap) {
            std::cerr << "warning: evaluation corpus overlaps the training manifest's inputs\n";
        }
    }

    // Same synthesis as dataset generation, minus the patch cutting: one blur
    // std per image, integer plane from the raw pixels, targets from the
    // blurred plane, integer plane degraded at the evaluation qp.
    const StdRange range = default_std_range(variant);
    std::mt19937_64 rng(o.common.seed);
    std::uniform_real_distribution<double> dist(range.lo, range.hi);
    std::vector<double> stds(corpus.size());
    for (double& s : stds) s = dist(rng);

    const auto positions = GvtcnnConfig{variant}.positions();
    const int n_pos = static_cast<int>(positions.size());
    std::vector<double> sse_copy(n_pos, 0.0), sse_dctif(n_pos, 0.0), sse_gvt(n_pos, 0.0);
    double px_count = 0.0;
    const int factor = variant == Variant::H ? 2 : 4;

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const Plane& src = corpus[i];
        const int cw = src.width - src.width % factor;
        const int ch = src.height - src.height % factor;
        if (cw < 8 * factor || ch < 8 * factor) {
            throw DataError("corpus image " + std::to_string(i) +
                            " too small for evaluation (needs an 8x8 integer plane)");
        }
        Plane cropped(cw, ch);
        for (int y = 0; y < ch; ++y)
            std::copy_n(src.row(y), cw, cropped.row(y));

        const PlaneF blurred = blur(cropped, gaussian_kernel(stds[i]));
        const SampledPlanes sampled = variant == Variant::H ? sample_half(cropped, blurred)
                                                            : sample_quarter(cropped, blurred);
        const Plane degraded = reconstruction_proxy(sampled.integer, qp);

        const InterpPlaneSet dctif_set = interpolate_all(degraded);
        const std::vector<Plane> gvt = infer_plane(model, degraded);

        const double n = static_cast<double>(degraded.samples.size());
        px_count += n;
        for (int p = 0; p < n_pos; ++p) {
            const Plane& target = sampled.targets[p];
            sse_copy[p] += plane_mse(degraded, target) * n;
            sse_dctif[p] += plane_mse(dctif_set.at(positions[p]), target) * n;
            sse_gvt[p] += plane_mse(gvt[p], target) * n;
        }
    }

    std::string csv = "position,psnr_copy,psnr_dctif,psnr_gvtcnn,overlap_warning\n";
    char buf[160];
    double mean_copy = 0.0, mean_dctif = 0.0, mean_gvt = 0.0;
    auto db = [](double sse, double n) { return mse_to_psnr(sse / n); };
    for (int p = 0; p < n_pos; ++p) {
        const double c = db(sse_copy[p], px_count);
        const double d = db(sse_dctif[p], px_count);
        const double g = db(sse_gvt[p], px_count);
        mean_copy += c / n_pos;
        mean_dctif += d / n_pos;
        mean_gvt += g / n_pos;
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f,%d\n",
                      positions[p].name().c_str(), c, d, g, overlap ? 1 : 0);
        csv += buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%.4f,%.4f,%.4f,%d\n", mean_copy, mean_dctif, mean_gvt,
                  overlap ? 1 : 0);
    csv += buf;

    const fs::path out_dir = prepare_out_dir(o.common);
    write_text(out_dir / "eval.csv", csv);

    RunManifest m;
    m.command = "eval-interp";
    m.seed = o.common.seed;
    m.config = {{"variant", variant_name(variant)},
                {"qp", qp},
                {"std_lo", range.lo},
                {"std_hi", range.hi},
                {"overlap_warning", overlap},
                {"threads", o.common.threads},
                {"out_dir", o.common.out_dir}};
    m.inputs = std::move(inputs);
    m.outputs = {"eval.csv"};
    write_manifest(m, out_dir / "manifest.json");

    std::printf("eval %s qp %d over %zu images: copy %.4f dB, dctif %.4f dB, gvtcnn %.4f dB\n",
                variant_name(variant), qp, corpus.size(), mean_copy, mean_dctif, mean_gvt);
    return 0;
}

// ---- simulate ----

struct SimOpts {
    CommonOpts common;
    std::string frames;      // raw Y sequence
    int width = 0, height = 0, count = 0;
    std::string frames_dir;  // directory of PGMs
    std::string mode = "per_block_best";
    std::string model_h, model_q;
    SimConfig cfg;
};

int run_simulate(const SimOpts& o) {
    apply_threads(o.common.threads);

    SelectionMode mode;
    if (o.mode == "dctif_only") mode = SelectionMode::dctif_only;
    else if (o.mode == "gvtcnn_only") mode = SelectionMode::gvtcnn_only;
    else if (o.mode == "per_block_best") mode = SelectionMode::per_block_best;
    else throw UsageError("--mode must be dctif_only, gvtcnn_only or per_block_best");

    std::vector<ManifestInput> inputs;
    std::vector<Plane> frames;
    if (!o.frames_dir.empty()) {
        for (const fs::path& f : list_pgm_files(o.frames_dir)) {
            frames.push_back(read_pgm(f));
            inputs.push_back({f.string(), file_crc32(f), fs::file_size(f)});
        }
        if (frames.empty()) throw DataError("no .pgm files in " + o.frames_dir);
    } else if (!o.frames.empty()) {
        if (o.width < 1 || o.height < 1 || o.count < 1) {
            throw UsageError("--frames needs positive --width, --height and --count");
        }
        frames = read_raw_y_sequence(o.frames, o.width, o.height, o.count);
        inputs.push_back({o.frames, file_crc32(o.frames), fs::file_size(o.frames)});
    } else {
        throw UsageError("one of --frames or --frames-dir is required");
    }

    SimConfig cfg = o.cfg;
    cfg.selection_mode = mode;

    GvtcnnModel mh, mq;
    const GvtcnnModel* ph = nullptr;
    const GvtcnnModel* pq = nullptr;
    if (mode != SelectionMode::dctif_only) {
        if (o.model_h.empty() || o.model_q.empty()) {
            throw ConfigError(std::string("mode ") + selection_mode_name(mode) +
                              " needs --model-h and --model-q");
        }
        mh = load_weights(o.model_h, Variant::H);
        mq = load_weights(o.model_q, Variant::Q);
        ph = &mh;
        pq = &mq;
        inputs.push_back({o.model_h, file_crc32(o.model_h), fs::file_size(o.model_h)});
        inputs.push_back({o.model_q, file_crc32(o.model_q), fs::file_size(o.model_q)});
    }

    const McReport report = simulate(frames, ph, pq, cfg);

    const fs::path out_dir = prepare_out_dir(o.common);
    write_text(out_dir / "report.csv", report_to_csv(report));

    RunManifest m;
    m.command = "simulate";
    m.seed = o.common.seed;
    m.config = {{"mode", selection_mode_name(mode)},
                {"qp", cfg.qp},
                {"block_size", cfg.block_size},
                {"search_range", cfg.search_range},
                {"lambda", cfg.lambda},
                {"threads", o.common.threads},
                {"out_dir", o.common.out_dir}};
    m.inputs = std::move(inputs);
    m.outputs = {"report.csv"};
    write_manifest(m, out_dir / "manifest.json");

    std::printf("simulated %zu frames (%s): mean psnr %.4f dB, mean sad %.2f\n", frames.size() - 1,
                selection_mode_name(mode), report.mean_psnr, report.mean_sad);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional-pel interpolation toolkit: fixed-filter and learned "
                 "interpolators, training data synthesis, and a block motion-"
                 "compensation simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("subpel ") + kToolVersion);

    GenOpts gen;
    CLI::App* gen_cmd = app.add_subcommand(
        "gen-data", "Synthesize a training dataset (GVTD) from a grayscale corpus");
    add_corpus(gen_cmd, gen.corpus);
    gen_cmd->add_option("--variant", gen.variant, "h (half-pel, 3 targets) or q (quarter, 12)")
        ->required()
        ->check(CLI::IsMember({"h", "q", "H", "Q"}));
    gen_cmd->add_option("--qp", gen.qp, "Degradation strength for the integer plane, 0..51")
        ->required()
        ->check(CLI::Range(0, 51));
    gen_cmd->add_option("--std-lo", gen.std_lo, "Blur std range low end (default per variant)");
    gen_cmd->add_option("--std-hi", gen.std_hi, "Blur std range high end");
    add_common(gen_cmd, gen.common);

    TrainOpts tr;
    CLI::App* train_cmd = app.add_subcommand(
        "train", "Train a model on a GVTD dataset; writes GVTW weights and loss.csv. "
                 "Columns: iteration,loss,lr");
    train_cmd->add_option("--dataset", tr.dataset, "GVTD dataset file")->required();
    train_cmd->add_option("--variant", tr.variant, "Expected dataset variant, h or q")
        ->required()
        ->check(CLI::IsMember({"h", "q", "H", "Q"}));
    train_cmd->add_option("--iters", tr.tc.total_iterations, "Adam iterations")
        ->capture_default_str();
    train_cmd->add_option("--batch", tr.tc.batch_size, "Minibatch size")->capture_default_str();
    train_cmd->add_option("--lr", tr.tc.lr_initial, "Initial learning rate")
        ->capture_default_str();
    train_cmd->add_option("--lr-drop-iter", tr.tc.lr_drop_iteration,
                          "Last iteration at the initial rate")
        ->capture_default_str();
    train_cmd->add_option("--lr-drop-factor", tr.tc.lr_drop_factor, "Rate divisor after the drop")
        ->capture_default_str();
    add_common(train_cmd, tr.common);

    EvalOpts ev;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval-interp",
        "Synthesize held-out ground truth and compare copy, DCTIF and model PSNR per "
        "position into eval.csv. Columns: position,psnr_copy,psnr_dctif,psnr_gvtcnn,"
        "overlap_warning");
    eval_cmd->add_option("--weights", ev.weights, "GVTW weight file")->required();
    add_corpus(eval_cmd, ev.corpus);
    eval_cmd->add_option("--qp", ev.qp, "Degradation qp (default: the model's qp tag)")
        ->check(CLI::Range(0, 51));
    eval_cmd->add_option("--train-manifest", ev.train_manifest,
                         "Training manifest; warns when corpus hashes overlap its inputs");
    add_common(eval_cmd, ev.common);

    SimOpts sim;
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate", "Block motion compensation over a frame sequence; CSV report. Columns: "
                    "frame,psnr_db,mean_sad,bits_proxy,blocks_dctif,blocks_gvtcnn");
    sim_cmd->add_option("--frames", sim.frames, "Raw 8-bit Y sequence file");
    sim_cmd->add_option("--width", sim.width, "Frame width for --frames");
    sim_cmd->add_option("--height", sim.height, "Frame height for --frames");
    sim_cmd->add_option("--count", sim.count, "Frame count for --frames");
    sim_cmd->add_option("--frames-dir", sim.frames_dir, "Directory of PGM frames");
    sim_cmd->add_option("--mode", sim.mode, "dctif_only, gvtcnn_only or per_block_best")
        ->capture_default_str()
        ->check(CLI::IsMember({"dctif_only", "gvtcnn_only", "per_block_best"}));
    sim_cmd->add_option("--model-h", sim.model_h, "Half-pel GVTW weights");
    sim_cmd->add_option("--model-q", sim.model_q, "Quarter-pel GVTW weights");
    sim_cmd->add_option("--qp", sim.cfg.qp, "Reference degradation qp")
        ->capture_default_str()
        ->check(CLI::Range(0, 51));
    sim_cmd->add_option("--block-size", sim.cfg.block_size, "Motion block size")
        ->capture_default_str();
    sim_cmd->add_option("--search-range", sim.cfg.search_range, "Integer search range in pels")
        ->capture_default_str();
    sim_cmd->add_option("--lambda", sim.cfg.lambda, "Bit-cost weight in the block cost")
        ->capture_default_str();
    add_common(sim_cmd, sim.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // --help/--version exit 0, usage errors 2
    }

    try {
        if (*gen_cmd) return run_gen_data(gen);
        if (*train_cmd) return run_train(tr);
        if (*eval_cmd) return run_eval_interp(ev);
        if (*sim_cmd) return run_simulate(sim);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

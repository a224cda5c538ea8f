#include "subpel/plane.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "subpel/errors.hpp"

namespace subpel {

double plane_mse(const Plane& a, const Plane& b) {
    if (a.width != b.width || a.height != b.height) {
        throw ContractError("plane_mse: size mismatch " + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const double d = static_cast<double>(a.samples[i]) - static_cast<double>(b.samples[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.samples.size());
}

double mse_to_psnr(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double psnr(const Plane& a, const Plane& b) {
    return mse_to_psnr(plane_mse(a, b));
}

namespace {

int pgm_token(std::istream& in, std::size_t& offset) {
    // Skips whitespace and '#' comments, then reads one decimal token.
    int ch = in.get();
    ++offset;
    while (in) {
        if (ch == '#') {
            while (in && ch != '\n') { ch = in.get(); ++offset; }
        } else if (std::isspace(ch)) {
            ch = in.get();
            ++offset;
        } else {
            break;
        }
    }
    if (!in || !std::isdigit(ch)) throw FormatError("PGM: expected integer token", offset - 1);
    long value = 0;
    while (in && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        if (value > 1 << 30) throw FormatError("PGM: integer token out of range", offset - 1);
        ch = in.get();
        ++offset;
    }
    // ch is the single whitespace terminating the token (or EOF).
    return static_cast<int>(value);
}

} // namespace

Plane read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open PGM file: " + path.string());
    std::size_t offset = 0;
    char magic[2] = {};
    in.read(magic, 2);
    offset += 2;
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw FormatError("PGM: bad magic in " + path.string() + ", expected P5", 0);
    }
    const int w = pgm_token(in, offset);
    const int h = pgm_token(in, offset);
    const int maxval = pgm_token(in, offset);
    if (w < 1 || h < 1) throw FormatError("PGM: bad dimensions in " + path.string(), offset);
    if (maxval != 255) throw FormatError("PGM: unsupported maxval " + std::to_string(maxval) +
                                         " in " + path.string() + ", expected 255", offset);
    Plane p(w, h);
    in.read(reinterpret_cast<char*>(p.samples.data()), static_cast<std::streamsize>(p.samples.size()));
    if (in.gcount() != static_cast<std::streamsize>(p.samples.size())) {
        throw FormatError("PGM: truncated pixel data in " + path.string(),
                          offset + static_cast<std::size_t>(in.gcount()));
    }
    return p;
}

void write_pgm(const std::filesystem::path& path, const Plane& plane) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open PGM file for writing: " + path.string());
    out << "P5\n" << plane.width << " " << plane.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(plane.samples.data()),
              static_cast<std::streamsize>(plane.samples.size()));
    if (!out) throw DataError("failed writing PGM file: " + path.string());
}

Plane read_raw_y(const std::filesystem::path& path, int width, int height) {
    auto frames = read_raw_y_sequence(path, width, height, 1);
    return frames[0];
}

std::vector<Plane> read_raw_y_sequence(const std::filesystem::path& path,
                                       int width, int height, int frame_count) {
    if (width < 1 || height < 1 || frame_count < 1) {
        throw ContractError("raw Y read: width/height/frames must be positive");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open raw Y file: " + path.string());
    std::vector<Plane> frames;
    frames.reserve(static_cast<std::size_t>(frame_count));
    const std::size_t frame_bytes = static_cast<std::size_t>(width) * height;
    for (int f = 0; f < frame_count; ++f) {
        Plane p(width, height);
        in.read(reinterpret_cast<char*>(p.samples.data()), static_cast<std::streamsize>(frame_bytes));
        if (in.gcount() != static_cast<std::streamsize>(frame_bytes)) {
            throw FormatError("raw Y: truncated frame " + std::to_string(f) + " in " + path.string(),
                              static_cast<std::size_t>(f) * frame_bytes +
                                  static_cast<std::size_t>(in.gcount()));
        }
        frames.push_back(std::move(p));
    }
    return frames;
}

std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("corpus path is not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<Plane> read_pgm_dir(const std::filesystem::path& dir) {
    const std::vector<std::filesystem::path> files = list_pgm_files(dir);
    std::vector<Plane> planes;
    planes.reserve(files.size());
    for (const auto& f : files) planes.push_back(read_pgm(f));
    if (planes.empty()) throw DataError("no .pgm files in corpus directory: " + dir.string());
    return planes;
}

} // namespace subpel

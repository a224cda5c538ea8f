#ifndef SUBPEL_PLANE_HPP
#define SUBPEL_PLANE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace subpel {

// An 8-bit luma plane, row-major.
struct Plane {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> samples;

    Plane() = default;
    Plane(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int y, int x) { return samples[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return samples[static_cast<std::size_t>(y) * width + x]; }
    const std::uint8_t* row(int y) const { return samples.data() + static_cast<std::size_t>(y) * width; }
    std::uint8_t* row(int y) { return samples.data() + static_cast<std::size_t>(y) * width; }

    bool operator==(const Plane&) const = default;
};

// A real-valued plane, used between blurring and sampling.
struct PlaneF {
    int width = 0;
    int height = 0;
    std::vector<double> samples;

    PlaneF() = default;
    PlaneF(int w, int h, double fill = 0.0)
        : width(w), height(h), samples(static_cast<std::size_t>(w) * h, fill) {}

    double& at(int y, int x) { return samples[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return samples[static_cast<std::size_t>(y) * width + x]; }
};

// PSNR between two equal-sized planes, in dB. Returns +inf for identical
// planes.
double psnr(const Plane& a, const Plane& b);

// Mean squared error between two equal-sized planes.
double plane_mse(const Plane& a, const Plane& b);

double mse_to_psnr(double mse);

// Binary PGM (P5, maxval 255) reader/writer.
Plane read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Plane& plane);

// Raw 8-bit Y plane with caller-supplied dimensions.
Plane read_raw_y(const std::filesystem::path& path, int width, int height);

// Raw 8-bit Y sequence: frame_count planes of width*height bytes each.
std::vector<Plane> read_raw_y_sequence(const std::filesystem::path& path,
                                       int width, int height, int frame_count);

// Every *.pgm directly under dir, in lexicographic filename order.
std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir);

// Loads a corpus: every *.pgm under dir, in lexicographic filename order.
std::vector<Plane> read_pgm_dir(const std::filesystem::path& dir);

} // namespace subpel

#endif

// Throughput comparison of the optimized kernels against their serial
// per-pixel reference counterparts. Representative shapes are the ones the
// training loop and the simulator actually run.

#include <random>

#include <benchmark/benchmark.h>

#include "ref/reference.hpp"
#include "subpel/datagen.hpp"
#include "subpel/dctif.hpp"
#include "subpel/mcsim.hpp"
#include "subpel/plane.hpp"

using namespace subpel;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    for (float& v : t.flat()) v = d(rng);
    return t;
}

ConvLayer random_layer(int oc, int ic, std::uint64_t seed) {
    ConvLayer l = ConvLayer::make(oc, ic, false);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> d(0.0f, 0.1f);
    for (float& v : l.weights.flat()) v = d(rng);
    for (float& v : l.bias) v = d(rng);
    return l;
}

Plane random_plane(int w, int h, std::uint64_t seed) {
    Plane p(w, h);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(0, 255);
    for (std::uint8_t& v : p.samples) v = static_cast<std::uint8_t>(d(rng));
    return p;
}

// The narrow trunk shape dominates training time: 10 -> 10 channels on a
// batch of 32x32 patches.
void bench_conv_narrow(benchmark::State& state, bool optimized) {
    const Tensor in = random_tensor(8, 10, 32, 32, 1);
    const ConvLayer layer = random_layer(10, 10, 2);
    for (auto _ : state) {
        Tensor out = optimized ? conv2d_forward(in, layer)
                               : ref::conv2d_forward(in, layer, PaddingMode::replicate);
        benchmark::DoNotOptimize(out.data());
    }
}
void conv_narrow_optimized(benchmark::State& s) { bench_conv_narrow(s, true); }
void conv_narrow_reference(benchmark::State& s) { bench_conv_narrow(s, false); }
BENCHMARK(conv_narrow_optimized);
BENCHMARK(conv_narrow_reference);

// The wide lift layer: 48 -> 10 on the same batch.
void bench_conv_wide(benchmark::State& state, bool optimized) {
    const Tensor in = random_tensor(8, 48, 32, 32, 3);
    const ConvLayer layer = random_layer(10, 48, 4);
    for (auto _ : state) {
        Tensor out = optimized ? conv2d_forward(in, layer)
                               : ref::conv2d_forward(in, layer, PaddingMode::replicate);
        benchmark::DoNotOptimize(out.data());
    }
}
void conv_wide_optimized(benchmark::State& s) { bench_conv_wide(s, true); }
void conv_wide_reference(benchmark::State& s) { bench_conv_wide(s, false); }
BENCHMARK(conv_wide_optimized);
BENCHMARK(conv_wide_reference);

// All 15 fractional planes of a CIF-ish frame.
void bench_interpolate(benchmark::State& state, bool optimized) {
    const Plane src = random_plane(352, 288, 5);
    for (auto _ : state) {
        if (optimized) {
            InterpPlaneSet set = interpolate_all(src);
            benchmark::DoNotOptimize(set.planes.data());
        } else {
            for (int idx = 1; idx <= 15; ++idx) {
                Plane p = ref::interpolate_position(src, FracPos::from_index(idx));
                benchmark::DoNotOptimize(p.samples.data());
            }
        }
    }
}
void interpolate_all_optimized(benchmark::State& s) { bench_interpolate(s, true); }
void interpolate_per_pixel_reference(benchmark::State& s) { bench_interpolate(s, false); }
BENCHMARK(interpolate_all_optimized);
BENCHMARK(interpolate_per_pixel_reference);

void bench_blur(benchmark::State& state, bool optimized) {
    const Plane src = random_plane(352, 288, 6);
    const std::array<double, 9> k = gaussian_kernel(0.55);
    for (auto _ : state) {
        PlaneF out = optimized ? blur(src, k) : ref::blur(src, k.data());
        benchmark::DoNotOptimize(out.samples.data());
    }
}
void blur_optimized(benchmark::State& s) { bench_blur(s, true); }
void blur_reference(benchmark::State& s) { bench_blur(s, false); }
BENCHMARK(blur_optimized);
BENCHMARK(blur_reference);

void bench_search(benchmark::State& state, bool optimized) {
    const Plane reference = random_plane(176, 144, 7);
    const Plane target = random_plane(176, 144, 8);
    for (auto _ : state) {
        long long total = 0;
        for (int by = 0; by + 16 <= 144; by += 48) {
            for (int bx = 0; bx + 16 <= 176; bx += 48) {
                if (optimized) {
                    total += full_search_integer(target, bx, by, 16, 16, reference, 12).sad;
                } else {
                    total += ref::full_search(target, bx, by, 16, 16, reference, 12).sad;
                }
            }
        }
        benchmark::DoNotOptimize(total);
    }
}
void full_search_optimized(benchmark::State& s) { bench_search(s, true); }
void full_search_reference(benchmark::State& s) { bench_search(s, false); }
BENCHMARK(full_search_optimized);
BENCHMARK(full_search_reference);

} // namespace

BENCHMARK_MAIN();

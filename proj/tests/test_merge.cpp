// Copyright (c) 2026 The hdrplus-burst Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "hdrplus/merge.hpp"
#include "hdrplus/pyramid.hpp"
#include "test_util.hpp"

using namespace hdrplus;
using cd = std::complex<double>;

namespace {

// Direct O(n^4) DFT, unnormalized forward.
std::vector<cd> naive_dft(const std::vector<cd>& x, int n, bool inverse = false) {
    std::vector<cd> out(x.size());
    const double sign = inverse ? 1.0 : -1.0;
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            cd acc = 0;
            for (int y = 0; y < n; ++y) {
                for (int x_ = 0; x_ < n; ++x_) {
                    const double ph = sign * 2.0 * std::numbers::pi * (static_cast<double>(u * x_) / n +
                                                                        static_cast<double>(v * y) / n);
                    acc += x[static_cast<size_t>(y) * n + x_] * cd(std::cos(ph), std::sin(ph));
                }
            }
            out[static_cast<size_t>(v) * n + u] = inverse ? acc / static_cast<double>(n * n) : acc;
        }
    }
    return out;
}

std::vector<cd> to_complex(const std::vector<double>& t) {
    return {t.begin(), t.end()};
}

std::vector<double> random_tile(int n, uint64_t seed, double lo = 0.0, double hi = 1.0) {
    return testutil::random_gray(n, n, seed, lo, hi).storage();
}

double max_diff(std::span<const Complex> a, const std::vector<cd>& b) {
    double m = 0;
    for (size_t i = 0; i < b.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

RawBurst burst_from(const std::vector<GrayImage>& mosaics, int black = 0, int white = 65535) {
    RawBurst b;
    b.meta.black_level = black;
    b.meta.white_level = white;
    for (const auto& m : mosaics) {
        BayerFrame f(m.width(), m.height(), Cfa::RGGB);
        for (size_t i = 0; i < f.samples.size(); ++i) {
            f.samples[i] = static_cast<uint16_t>(std::lround(black + m.pixels()[i] * (white - black)));
        }
        b.frames.push_back(f);
    }
    return b;
}

GrayImage normalized(const BayerFrame& f, const BurstMetadata& m) {
    GrayImage g(f.width, f.height);
    for (size_t i = 0; i < f.samples.size(); ++i) {
        g.storage()[i] = normalize_sample(f.samples[i], m);
    }
    return g;
}

double mse(const GrayImage& a, const GrayImage& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        s += (a.pixels()[i] - b.pixels()[i]) * (a.pixels()[i] - b.pixels()[i]);
    }
    return s / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("merge config") {
    MergeConfig cfg;
    CHECK(cfg.tile_size == 16);
    CHECK(cfg.tau == 75.0);
    CHECK(cfg.s == 0.1);
    CHECK(cfg.scale_factor() == 32.0);
    cfg.tile_size = 8;
    CHECK(cfg.scale_factor() == 8.0);
    CHECK_NOTHROW(validate(cfg));
    cfg.tau = -1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = MergeConfig{};
    cfg.s = -0.1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = MergeConfig{};
    cfg.tile_size = 15;
    CHECK_THROWS_AS(validate(cfg), Error);
}

TEST_CASE("tile_rms and noise variance") {
    const std::vector<double> c(16, 0.3);
    CHECK(tile_rms(c) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(tile_rms(std::vector<double>{0, 0, 2, 2}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    const double flat = tile_rms(std::vector<double>{1, 1, 1, 1});
    const double contrast = tile_rms(std::vector<double>{0, 2, 0, 2});
    CHECK(flat == doctest::Approx(1.0));
    CHECK(contrast == doctest::Approx(std::sqrt(2.0)));
    CHECK(contrast > flat);

    CHECK(tile_noise_variance(random_tile(16, 1), {0.0, 4e-6}) == doctest::Approx(4e-6).epsilon(1e-15));
    CHECK(tile_noise_variance(std::vector<double>(256, 0.5), {1e-4, 0.0}) == doctest::Approx(5e-5).epsilon(1e-15));
    CHECK(tile_noise_variance(std::vector<double>(256, 0.0), {1e-4, 1e-6}) == doctest::Approx(1e-6).epsilon(1e-15));
}

TEST_CASE("temporal merge of identical tiles returns the reference spectrum") {
    const int n = 8;
    const auto t = random_tile(n, 3);
    TileStack stack{n, {t, t, t, t}};
    const auto expected = naive_dft(to_complex(t), n);
    for (double tau : {0.0, 1.0, 75.0, 1e12}) {
        MergeConfig cfg{n, tau, 0.1};
        CHECK(max_diff(temporal_merge_stack(stack, 1e-4, cfg).span(), expected) < 1e-10);
        CHECK(max_diff(temporal_merge_stack(stack, 0.0, cfg).span(), expected) < 1e-10);
    }
}

TEST_CASE("tau = 0 keeps the reference") {
    const int n = 16;
    TileStack stack{n, {random_tile(n, 1), random_tile(n, 2), random_tile(n, 3)}};
    const auto expected = naive_dft(to_complex(stack.tiles[0]), n);
    CHECK(max_diff(temporal_merge_stack(stack, 1e-3, {n, 0.0, 0.1}).span(), expected) < 1e-9);
}

TEST_CASE("huge tau averages the aligned tiles") {
    const int n = 16;
    TileStack stack{n, {random_tile(n, 4), random_tile(n, 5), random_tile(n, 6), random_tile(n, 7)}};
    const FftBuffer merged = temporal_merge_stack(stack, 1e-3, {n, 1e12, 0.1});
    std::vector<cd> spec(merged.span().begin(), merged.span().end());
    const auto spatial = naive_dft(spec, n, true);
    for (int i = 0; i < n * n; ++i) {
        double mean = 0;
        for (const auto& t : stack.tiles) mean += t[i];
        mean /= 4.0;
        CHECK(std::abs(spatial[i].real() - mean) < 1e-6);
        CHECK(std::abs(spatial[i].imag()) < 1e-9);
    }
}

TEST_CASE("single-bin closed form at |D|^2 = c sigma^2") {
    const int n = 8;
    const auto t0 = random_tile(n, 8);
    const auto t1 = random_tile(n, 9);
    const auto f0 = naive_dft(to_complex(t0), n);
    const auto f1 = naive_dft(to_complex(t1), n);
    const size_t bin = 3 * n + 2;
    const double d2 = std::norm(f0[bin] - f1[bin]);
    MergeConfig cfg{n, 75.0, 0.1};
    const double c = cfg.scale_factor() * cfg.tau;
    const double sigma2 = d2 / c;
    const FftBuffer out = temporal_merge_stack(TileStack{n, {t0, t1}}, sigma2, cfg);
    // A = 1/2: (T0 + (T1 + T0) / 2) / 2.
    const cd expected = (f0[bin] + 0.5 * f1[bin] + 0.5 * f0[bin]) / 2.0;
    CHECK(std::abs(out[bin] - expected) < 1e-10);
}

TEST_CASE("Wiener weight decreases in tau so the merge moves away from the reference") {
    const int n = 8;
    const auto t0 = random_tile(n, 10);
    const auto t1 = random_tile(n, 11);
    const auto f0 = naive_dft(to_complex(t0), n);
    std::vector<double> previous(n * n, -1.0);
    for (double tau : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
        const FftBuffer out = temporal_merge_stack(TileStack{n, {t0, t1}}, 1e-3, {n, tau, 0.1});
        for (int k = 0; k < n * n; ++k) {
            const double dist = std::abs(out[k] - f0[k]);
            CHECK(dist > previous[k]);
            previous[k] = dist;
        }
    }
}

TEST_CASE("merged spectra of real tiles stay conjugate symmetric") {
    const int n = 16;
    TileStack stack{n, {random_tile(n, 12), random_tile(n, 13), random_tile(n, 14)}};
    MergeConfig cfg;
    FftBuffer out = temporal_merge_stack(stack, 2e-3, cfg);
    spatial_denoise_spectrum(out.span(), n, 2e-3, 3, cfg);
    for (int v = 0; v < n; ++v) {
        for (int u = 0; u < n; ++u) {
            const Complex a = out[static_cast<size_t>(v) * n + u];
            const Complex b = out[static_cast<size_t>((n - v) % n) * n + (n - u) % n];
            CHECK(std::abs(a - std::conj(b)) < 1e-9);
        }
    }
    std::vector<cd> spec(out.span().begin(), out.span().end());
    for (const cd& x : naive_dft(spec, n, true)) {
        CHECK(std::abs(x.imag()) < 1e-9);
    }
}

TEST_CASE("spatial shrinkage") {
    const int n = 16;
    const auto t = random_tile(n, 15);
    const auto base = naive_dft(to_complex(t), n);
    auto run = [&](double s, double sigma2, int frames) {
        FftBuffer buf(base.size());
        for (size_t k = 0; k < base.size(); ++k) buf[k] = base[k];
        spatial_denoise_spectrum(buf.span(), n, sigma2, frames, {n, 75.0, s});
        return std::vector<cd>(buf.span().begin(), buf.span().end());
    };

    SUBCASE("s = 0 is the identity") {
        const auto out = run(0.0, 1e-2, 4);
        for (size_t k = 0; k < base.size(); ++k) CHECK(out[k] == base[k]);
    }
    SUBCASE("DC bin is never touched") {
        for (double s : {0.1, 10.0, 1e12}) {
            CHECK(run(s, 1e-2, 2)[0] == base[0]);
        }
    }
    SUBCASE("huge s removes every non-DC bin") {
        const auto out = run(1e12, 1e-4, 8);
        for (size_t k = 1; k < base.size(); ++k) {
            CHECK(std::abs(out[k]) < 1e-6 * std::abs(base[k]));
        }
    }
    SUBCASE("per-bin formula with wrap-around frequency radius") {
        const double s = 0.3, sigma2 = 5e-3;
        const int frames = 3;
        const auto out = run(s, sigma2, frames);
        const double gamma = (n * n / 8.0) / 2.0 * s;
        for (int v = 0; v < n; ++v) {
            for (int u = 0; u < n; ++u) {
                const double wu = std::min(u, n - u), wv = std::min(v, n - v);
                const double f = gamma * std::hypot(wu, wv);
                const cd x = base[static_cast<size_t>(v) * n + u];
                const double e = std::norm(x);
                const cd expected = e / (e + f * sigma2 / frames) * x;
                CHECK(std::abs(out[static_cast<size_t>(v) * n + u] - expected) < 1e-12);
            }
        }
    }
    SUBCASE("more frames means gentler shrinkage") {
        const auto two = run(0.5, 1e-2, 2);
        const auto eight = run(0.5, 1e-2, 8);
        for (size_t k = 1; k < base.size(); ++k) {
            CHECK(std::abs(eight[k]) >= std::abs(two[k]));
        }
    }
}

TEST_CASE("raised cosine window") {
    const auto w16 = raised_cosine_window_1d(16);
    CHECK(w16[0] == doctest::Approx(0.5 - 0.5 * std::cos(std::numbers::pi / 16)).epsilon(1e-14));
    CHECK(w16[0] == doctest::Approx(0.009607).epsilon(1e-4));
    for (int n : {2, 8, 16, 32}) {
        const auto w = raised_cosine_window_1d(n);
        for (int x = 0; x < n; ++x) {
            CHECK(w[x] > 0.0);
            CHECK(w[x] < 1.0);
            CHECK(w[x] == doctest::Approx(w[n - 1 - x]).epsilon(1e-14));
        }
        for (int x = 0; x < n / 2; ++x) {
            CHECK(std::abs(w[x] + w[x + n / 2] - 1.0) < 1e-15);
        }
        const auto w2 = raised_cosine_window(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                CHECK(w2[i * n + j] == w2[j * n + i]);
                CHECK(w2[i * n + j] == doctest::Approx(w2[(n - 1 - i) * n + j]).epsilon(1e-14));
            }
        }
    }
    CHECK_THROWS_AS(raised_cosine_window_1d(7), Error);
}

TEST_CASE("window overlap-add is a partition of unity") {
    for (int n : {8, 16, 32}) {
        const auto w = raised_cosine_window(n);
        const int stride = n / 2, tiles = 10;
        const int size = (tiles + 1) * stride;
        std::vector<double> acc(static_cast<size_t>(size) * size, 0.0);
        for (int ty = 0; ty < tiles; ++ty) {
            for (int tx = 0; tx < tiles; ++tx) {
                for (int j = 0; j < n; ++j) {
                    for (int i = 0; i < n; ++i) {
                        acc[static_cast<size_t>(ty * stride + j) * size + tx * stride + i] += w[j * n + i];
                    }
                }
            }
        }
        for (int y = stride; y < size - stride; ++y) {
            for (int x = stride; x < size - stride; ++x) {
                CHECK(std::abs(acc[static_cast<size_t>(y) * size + x] - 1.0) < 1e-9);
            }
        }
    }
}

TEST_CASE("merge_burst identities") {
    const int W = 64, H = 48;
    const TileGrid grid = make_tile_grid(W / 2, H / 2, 16);
    const GrayImage clean = testutil::random_gray(W, H, 20, 0.05, 0.95);

    SUBCASE("identical noise-free frames with s = 0 reproduce the reference") {
        const RawBurst b = burst_from(std::vector<GrayImage>(8, clean), 64, 16383);
        std::vector<MotionField> zero(7, MotionField(grid));
        for (double tau : {0.0, 1.0, 75.0, 1e6}) {
            const GrayImage merged = merge_burst_normalized(b, 0, zero, {1e-4, 1e-6}, {16, tau, 0.0});
            CHECK(testutil::max_abs_diff(merged.pixels(), normalized(b.frames[0], b.meta).pixels()) < 1e-6);
            CHECK(merge_burst(b, 0, zero, {1e-4, 1e-6}, {16, tau, 0.0}) == b.frames[0]);
        }
        // Zero noise model is allowed.
        const GrayImage merged = merge_burst_normalized(b, 0, zero, {0.0, 0.0}, {16, 75.0, 0.1});
        CHECK(testutil::max_abs_diff(merged.pixels(), normalized(b.frames[0], b.meta).pixels()) < 1e-6);
    }
    SUBCASE("tau = 0 returns the reference for distinct frames") {
        std::vector<GrayImage> frames{clean, testutil::random_gray(W, H, 21), testutil::random_gray(W, H, 22)};
        const RawBurst b = burst_from(frames, 0, 4095);
        std::vector<MotionField> zero(2, MotionField(grid));
        for (int ref : {0, 2}) {
            const GrayImage merged = merge_burst_normalized(b, ref, zero, {1e-3, 1e-5}, {16, 0.0, 0.0});
            CHECK(testutil::max_abs_diff(merged.pixels(), normalized(b.frames[ref], b.meta).pixels()) < 1e-6);
        }
    }
    SUBCASE("outputs stay inside [black, white]") {
        std::vector<GrayImage> frames{GrayImage(W, H, 1.0), GrayImage(W, H, 0.0)};
        const RawBurst b = burst_from(frames, 100, 1000);
        const BayerFrame out = merge_burst(b, 0, {MotionField(grid)}, {1e-3, 1e-5}, {16, 1e6, 5.0});
        for (uint16_t s : out.samples) {
            CHECK(s >= 100);
            CHECK(s <= 1000);
        }
    }
    SUBCASE("input validation") {
        const RawBurst b = burst_from({clean, clean});
        CHECK_THROWS_AS(merge_burst(b, 0, {}, {1e-4, 1e-6}, {}), Error);
        CHECK_THROWS_AS(merge_burst(b, 2, {MotionField(grid)}, {1e-4, 1e-6}, {}), Error);
        CHECK_THROWS_AS(merge_burst(b, 0, {MotionField(make_tile_grid(W / 2, H / 2, 8))}, {1e-4, 1e-6}, {}), Error);
        CHECK_THROWS_AS(merge_burst(b, 0, {MotionField(grid)}, {-1e-4, 1e-6}, {}), Error);
    }
}

TEST_CASE("merge_burst uses the motion field and rejects misaligned content") {
    const int W = 128, H = 96, margin = 16;
    // Smooth scene on the half-resolution planes, noise added per frame.
    const GrayImage canvas = testutil::random_gray(W + 2 * margin, H + 2 * margin, 30, 0.2, 0.8);
    const GrayImage scene = gaussian_blur(canvas, 1.5, 3);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> noise(0.0, 1.0);
    const NoiseParams np{4e-4, 1.6e-5};
    auto frame = [&](int u, int v, bool noisy) {
        GrayImage img(W, H);
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const double c = scene(x + margin - u, y + margin - v);
                img(x, y) = noisy ? c + std::sqrt(np.lambda_s * c + np.lambda_r) * noise(rng) : c;
            }
        }
        return img;
    };
    GrayImage clean(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) clean(x, y) = scene(x + margin, y + margin);

    // Shift (4, -2) on the mosaic is (2, -1) on the color planes.
    const RawBurst b = burst_from({frame(0, 0, true), frame(4, -2, true)}, 0, 65535);
    const TileGrid grid = make_tile_grid(W / 2, H / 2, 16);
    MotionField right(grid), wrong(grid);
    for (auto& mv : right.vectors) mv = {2, -1};
    for (auto& mv : wrong.vectors) mv = {-4, 3};

    const double ref_mse = mse(normalized(b.frames[0], b.meta), clean);
    const double good = mse(merge_burst_normalized(b, 0, {right}, np, {}), clean);
    const double bad = mse(merge_burst_normalized(b, 0, {wrong}, np, {}), clean);
    CHECK(good < ref_mse);
    // Misaligned content costs less than 1 dB against the reference alone.
    CHECK(10 * std::log10(bad / ref_mse) < 1.0);

    ThreadPool pool(3);
    CHECK(merge_burst(b, 0, {right}, np, {}, &pool) == merge_burst(b, 0, {right}, np, {}));
}

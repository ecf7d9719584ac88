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

#include "hdrplus/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

namespace hdrplus {

namespace {

constexpr double kLow = 0.05;
constexpr double kHigh = 0.95;

// Smooth random field: lattice values every `cell` pixels, smoothstep
// interpolation. Output roughly in [-1, 1].
class ValueNoise {
public:
    ValueNoise(int width, int height, int cell, std::mt19937_64& rng)
        : cell_(cell), cols_(width / cell + 2), rows_(height / cell + 2) {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        lattice_.resize(static_cast<size_t>(cols_) * rows_);
        for (double& v : lattice_) {
            v = dist(rng);
        }
    }

    double operator()(int x, int y) const {
        const int cx = x / cell_;
        const int cy = y / cell_;
        const double fx = smooth(static_cast<double>(x % cell_) / cell_);
        const double fy = smooth(static_cast<double>(y % cell_) / cell_);
        const double a = at(cx, cy) + (at(cx + 1, cy) - at(cx, cy)) * fx;
        const double b = at(cx, cy + 1) + (at(cx + 1, cy + 1) - at(cx, cy + 1)) * fx;
        return a + (b - a) * fy;
    }

private:
    static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
    double at(int cx, int cy) const { return lattice_[static_cast<size_t>(cy) * cols_ + cx]; }

    int cell_;
    int cols_;
    int rows_;
    std::vector<double> lattice_;
};

struct Rect {
    int x0, y0, x1, y1;  // half-open

    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

Rect random_rect(std::mt19937_64& rng, int width, int height, int min_size, int max_size) {
    std::uniform_int_distribution<int> size(min_size, max_size);
    const int w = std::min(size(rng), width);
    const int h = std::min(size(rng), height);
    std::uniform_int_distribution<int> px(0, width - w);
    std::uniform_int_distribution<int> py(0, height - h);
    const int x = px(rng);
    const int y = py(rng);
    return {x, y, x + w, y + h};
}

void paint(GrayImage& img, const Rect& r, const std::function<double(int, int, double)>& f) {
    for (int y = std::max(0, r.y0); y < std::min(img.height(), r.y1); ++y) {
        for (int x = std::max(0, r.x0); x < std::min(img.width(), r.x1); ++x) {
            img(x, y) = f(x, y, img(x, y));
        }
    }
}

// Blocks of glyph-like strokes joining nodes of a 3×5 grid per character cell.
void draw_text_block(GrayImage& img, const Rect& block, double ink, std::mt19937_64& rng) {
    constexpr int kGlyphW = 12;
    constexpr int kGlyphH = 18;
    std::uniform_int_distribution<int> node_x(0, 2);
    std::uniform_int_distribution<int> node_y(0, 4);
    std::uniform_int_distribution<int> strokes(2, 5);
    for (int gy = block.y0; gy + kGlyphH <= block.y1; gy += kGlyphH + 4) {
        for (int gx = block.x0; gx + kGlyphW <= block.x1; gx += kGlyphW + 3) {
            const int count = strokes(rng);
            for (int s = 0; s < count; ++s) {
                const int ax = node_x(rng), ay = node_y(rng);
                int bx = ax + std::uniform_int_distribution<int>(-1, 1)(rng);
                int by = ay + std::uniform_int_distribution<int>(-1, 1)(rng);
                bx = std::clamp(bx, 0, 2);
                by = std::clamp(by, 0, 4);
                const double x0 = gx + 1 + ax * 4.5, y0 = gy + 1 + ay * 3.75;
                const double x1 = gx + 1 + bx * 4.5, y1 = gy + 1 + by * 3.75;
                const int steps = 16;
                for (int i = 0; i <= steps; ++i) {
                    const double t = static_cast<double>(i) / steps;
                    const int cx = static_cast<int>(std::lround(x0 + (x1 - x0) * t));
                    const int cy = static_cast<int>(std::lround(y0 + (y1 - y0) * t));
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int px = cx + dx, py = cy + dy;
                            if (px >= 0 && py >= 0 && px < img.width() && py < img.height()) {
                                img(px, py) = ink;
                            }
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

SynthSpec default_synth_spec(int frames, uint64_t seed, int max_shift) {
    if (frames < 1) {
        throw Error("synthetic burst needs at least one frame");
    }
    if (max_shift < 0) {
        throw Error("max shift must be non-negative");
    }
    SynthSpec spec;
    spec.seed = seed;
    std::mt19937_64 rng(seed ^ 0x5deece66dULL);
    const int half = max_shift / 2;
    std::uniform_int_distribution<int> dist(-half, half);
    spec.shifts.push_back({0, 0});
    for (int z = 1; z < frames; ++z) {
        spec.shifts.push_back({2 * dist(rng), 2 * dist(rng)});
    }
    return spec;
}

SynthSpec static_synth_spec(int frames, uint64_t seed) {
    SynthSpec spec = default_synth_spec(frames, seed, 0);
    return spec;
}

GrayImage generate_clean_scene(int width, int height, uint64_t seed) {
    if (width <= 0 || height <= 0) {
        throw Error("scene dimensions must be positive");
    }
    std::mt19937_64 rng(seed);
    GrayImage img(width, height);

    // Base: diagonal gradient plus multi-scale texture.
    const ValueNoise coarse(width, height, 96, rng);
    const ValueNoise mid(width, height, 24, rng);
    const ValueNoise fine(width, height, 6, rng);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double g = 0.15 + 0.7 * (0.6 * x / width + 0.4 * y / height);
            img(x, y) = g + 0.15 * coarse(x, y) + 0.08 * mid(x, y) + 0.05 * fine(x, y);
        }
    }

    std::uniform_real_distribution<double> level(0.1, 0.9);
    const int area_scale = std::max(1, width * height / (256 * 256));

    // Flat-ish patches carrying only weak fine texture.
    for (int i = 0; i < 2 * area_scale; ++i) {
        const Rect r = random_rect(rng, width, height, 24, 96);
        const double base = level(rng);
        paint(img, r, [&](int x, int y, double) { return base + 0.03 * fine(x, y); });
    }

    // Hard-edged rectangles.
    for (int i = 0; i < 3 * area_scale; ++i) {
        const Rect r = random_rect(rng, width, height, 16, 80);
        const double base = level(rng);
        paint(img, r, [&](int x, int y, double) { return base + 0.05 * mid(x, y) + 0.04 * fine(x, y); });
    }

    // Checkerboards of assorted pitch.
    std::uniform_int_distribution<int> pitch(3, 12);
    for (int i = 0; i < area_scale; ++i) {
        const Rect r = random_rect(rng, width, height, 32, 96);
        const int p = pitch(rng);
        const double a = level(rng), b = level(rng);
        paint(img, r, [&](int x, int y, double) {
            return (((x - r.x0) / p + (y - r.y0) / p) % 2 ? a : b) + 0.04 * fine(x, y);
        });
    }

    // Sinusoidal gratings, including near-Nyquist ones.
    std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
    std::uniform_real_distribution<double> period(2.5, 20.0);
    for (int i = 0; i < area_scale; ++i) {
        const Rect r = random_rect(rng, width, height, 32, 96);
        const double th = angle(rng), per = period(rng);
        const double cx = std::cos(th), sy = std::sin(th);
        const double mean = level(rng);
        paint(img, r, [&](int x, int y, double) {
            return mean + 0.25 * std::sin(2.0 * std::numbers::pi * (x * cx + y * sy) / per) + 0.04 * fine(x, y);
        });
    }

    // Text-like strokes.
    for (int i = 0; i < area_scale; ++i) {
        const Rect r = random_rect(rng, width, height, 48, 128);
        const double ink = level(rng) < 0.5 ? 0.08 : 0.92;
        draw_text_block(img, r, ink, rng);
    }

    // Mild per-site tint on the 2×2 cell.
    constexpr double kTint[2][2] = {{1.0, 0.96}, {0.96, 0.9}};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            img(x, y) = std::clamp(img(x, y) * kTint[y & 1][x & 1], kLow, kHigh);
        }
    }
    return img;
}

SynthBurst synthesize_burst(const SynthSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0 || spec.width % 2 || spec.height % 2) {
        throw Error("synthetic frame dimensions must be positive and even");
    }
    if (spec.shifts.size() < 2) {
        throw Error("synthetic burst needs at least two frames");
    }
    if (!(spec.shifts[0] == Shift{0, 0})) {
        throw Error("reference shift must be (0, 0)");
    }
    if (spec.noise.lambda_s < 0 || spec.noise.lambda_r < 0) {
        throw Error("noise parameters must be non-negative");
    }
    if (spec.black_level < 0 || spec.white_level <= spec.black_level || spec.white_level > 65535) {
        throw Error("invalid black/white levels");
    }
    int margin = 0;
    for (const Shift& s : spec.shifts) {
        margin = std::max({margin, std::abs(s.dx), std::abs(s.dy)});
    }
    margin += margin % 2;

    GrayImage canvas;
    if (spec.scene == SceneKind::constant) {
        canvas = GrayImage(spec.width + 2 * margin, spec.height + 2 * margin, spec.constant_level);
    } else {
        canvas = generate_clean_scene(spec.width + 2 * margin, spec.height + 2 * margin, spec.seed);
    }

    SynthBurst out;
    out.clean = GrayImage(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            out.clean(x, y) = canvas(x + margin, y + margin);
        }
    }

    BurstMetadata& meta = out.burst.meta;
    meta.iso = 100.0;
    meta.black_level = spec.black_level;
    meta.white_level = spec.white_level;
    meta.cfa = spec.cfa;
    meta.ref_index = 0;
    if (spec.noise.lambda_s > 0 || spec.noise.lambda_r > 0) {
        meta.noise_profile = spec.noise;
    }

    const double range = spec.white_level - spec.black_level;
    for (size_t z = 0; z < spec.shifts.size(); ++z) {
        const Shift& s = spec.shifts[z];
        std::seed_seq seq{static_cast<uint32_t>(spec.seed), static_cast<uint32_t>(spec.seed >> 32),
                          static_cast<uint32_t>(z), 0x9e3779b9u};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        BayerFrame frame(spec.width, spec.height, spec.cfa);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                const double clean = canvas(x + margin - s.dx, y + margin - s.dy);
                const double var = spec.noise.lambda_s * clean + spec.noise.lambda_r;
                const double value = var > 0 ? clean + std::sqrt(var) * normal(rng) : clean;
                const double raw = std::round(spec.black_level + value * range);
                frame.at(x, y) = static_cast<uint16_t>(
                    std::clamp(raw, static_cast<double>(spec.black_level), static_cast<double>(spec.white_level)));
            }
        }
        out.burst.frames.push_back(std::move(frame));
    }
    return out;
}

double psnr(std::span<const double> a, std::span<const double> b, double peak) {
    if (a.size() != b.size() || a.empty()) {
        throw Error("psnr: inputs must be non-empty and the same size");
    }
    if (!(peak > 0)) {
        throw Error("psnr: peak must be positive");
    }
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    if (sum == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double mse = sum / static_cast<double>(a.size());
    return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const BayerFrame& a, const GrayImage& clean, const BurstMetadata& meta) {
    if (a.width != clean.width() || a.height != clean.height()) {
        throw Error("psnr: frame and ground truth differ in size");
    }
    std::vector<double> norm(a.samples.size());
    for (size_t i = 0; i < norm.size(); ++i) {
        norm[i] = normalize_sample(a.samples[i], meta);
    }
    return psnr(norm, clean.pixels(), 1.0);
}

double alignment_accuracy(const MotionField& field, int width, int height, const MotionVector& truth) {
    const TileGrid& g = field.grid;
    int total = 0;
    int hits = 0;
    for (int ty = 0; ty < g.tiles_y; ++ty) {
        for (int tx = 0; tx < g.tiles_x; ++tx) {
            const int ox = g.origin_x(tx);
            const int oy = g.origin_y(ty);
            const double ax = ox + truth.u;
            const double ay = oy + truth.v;
            const bool inside = ox >= 0 && oy >= 0 && ox + g.tile_size <= width && oy + g.tile_size <= height &&
                                ax >= 0 && ay >= 0 && ax + g.tile_size <= width && ay + g.tile_size <= height;
            if (!inside) {
                continue;
            }
            ++total;
            if (field.at(tx, ty) == truth) {
                ++hits;
            }
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(hits) / total;
}

SynthReport evaluate_pipeline(const SynthSpec& spec, const PipelineConfig& cfg, ThreadPool* pool) {
    const SynthBurst synth = synthesize_burst(spec);
    PipelineConfig run = cfg;
    run.ref_index = 0;
    const AlignMergeResult result = align_and_merge(synth.burst, run, pool);

    SynthReport report;
    report.frames = spec.frames();
    report.psnr_ref = psnr(synth.burst.frames[0], synth.clean, synth.burst.meta);
    report.psnr_merged = psnr(result.merged, synth.clean, synth.burst.meta);
    report.gain_db = report.psnr_merged == report.psnr_ref ? 0.0 : report.psnr_merged - report.psnr_ref;

    const int gw = spec.width / 2;
    const int gh = spec.height / 2;
    double acc = 0.0;
    for (size_t i = 0; i < result.fields.size(); ++i) {
        const Shift& s = spec.shifts[i + 1];
        acc += alignment_accuracy(result.fields[i], gw, gh, {s.dx / 2.0, s.dy / 2.0});
    }
    report.alignment_accuracy = result.fields.empty() ? 1.0 : acc / static_cast<double>(result.fields.size());
    return report;
}

}  // namespace hdrplus

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

#include "hdrplus/merge.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hdrplus/pyramid.hpp"

namespace hdrplus {

void validate(const MergeConfig& cfg) {
    if (cfg.tile_size < 2 || cfg.tile_size % 2 != 0) {
        throw Error("merge tile size must be even and >= 2");
    }
    if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau)) {
        throw Error("tau must be a finite value >= 0");
    }
    if (!(cfg.s >= 0.0) || !std::isfinite(cfg.s)) {
        throw Error("spatial strength s must be a finite value >= 0");
    }
}

double tile_rms(std::span<const double> tile) {
    if (tile.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (double v : tile) {
        acc += v * v;
    }
    return std::sqrt(acc / static_cast<double>(tile.size()));
}

double tile_noise_variance(std::span<const double> reference_tile, const NoiseParams& np) {
    return np.lambda_s * tile_rms(reference_tile) + np.lambda_r;
}

namespace {

// Wiener weight; 0/0 is taken as 0 so identical tiles merge exactly.
inline double shrink_weight(double energy, double noise) {
    const double denom = energy + noise;
    return denom > 0.0 ? energy / denom : 0.0;
}

// Accumulates the pairwise merges of the alternate spectra into `out`.
void temporal_merge_spectra(const Complex* ref, const std::vector<const Complex*>& alts, size_t bins, double c_sigma2,
                            Complex* out) {
    const double inv_n = 1.0 / static_cast<double>(alts.size() + 1);
    for (size_t k = 0; k < bins; ++k) {
        const Complex t0 = ref[k];
        Complex acc = t0;
        for (const Complex* alt : alts) {
            const Complex tz = alt[k];
            const Complex d = t0 - tz;
            const double a = shrink_weight(std::norm(d), c_sigma2);
            acc += (1.0 - a) * tz + a * t0;
        }
        out[k] = acc * inv_n;
    }
}

}  // namespace

FftBuffer temporal_merge_stack(const TileStack& stack, double sigma2, const MergeConfig& cfg) {
    const int n = stack.tile_size;
    if (stack.tiles.empty()) {
        throw Error("temporal_merge_stack: empty stack");
    }
    const size_t bins = static_cast<size_t>(n) * n;
    for (const auto& t : stack.tiles) {
        if (t.size() != bins) {
            throw Error("temporal_merge_stack: tile size mismatch");
        }
    }
    const Fft2d fft(n, n);
    FftBuffer spatial(bins);
    std::vector<FftBuffer> spectra;
    for (const auto& t : stack.tiles) {
        for (size_t k = 0; k < bins; ++k) {
            spatial[k] = Complex(t[k], 0.0);
        }
        FftBuffer f(bins);
        fft.forward(spatial.data(), f.data());
        spectra.push_back(std::move(f));
    }
    std::vector<const Complex*> alts;
    for (size_t z = 1; z < spectra.size(); ++z) {
        alts.push_back(spectra[z].data());
    }
    FftBuffer out(bins);
    const double c = MergeConfig{n, cfg.tau, cfg.s}.scale_factor() * cfg.tau;
    temporal_merge_spectra(spectra[0].data(), alts, bins, c * sigma2, out.data());
    return out;
}

void spatial_denoise_spectrum(std::span<Complex> spectrum, int tile_size, double sigma2, int frames,
                              const MergeConfig& cfg) {
    const int n = tile_size;
    if (spectrum.size() != static_cast<size_t>(n) * n || frames < 1) {
        throw Error("spatial_denoise_spectrum: bad spectrum size or frame count");
    }
    const double gamma = MergeConfig{n, cfg.tau, cfg.s}.scale_factor() / 2.0 * cfg.s;
    const double noise = sigma2 / frames;
    if (gamma == 0.0) {
        return;
    }
    for (int y = 0; y < n; ++y) {
        const int fy = std::min(y, n - y);
        for (int x = 0; x < n; ++x) {
            const int fx = std::min(x, n - x);
            const double f = gamma * std::sqrt(static_cast<double>(fx * fx + fy * fy));
            Complex& bin = spectrum[static_cast<size_t>(y) * n + x];
            bin *= shrink_weight(std::norm(bin), f * noise);
        }
    }
}

std::vector<double> raised_cosine_window_1d(int n) {
    if (n < 2 || n % 2 != 0) {
        throw Error("raised cosine window size must be even and >= 2");
    }
    std::vector<double> w(n);
    for (int x = 0; x < n; ++x) {
        w[x] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (x + 0.5) / n);
    }
    return w;
}

std::vector<double> raised_cosine_window(int n) {
    const std::vector<double> w1 = raised_cosine_window_1d(n);
    std::vector<double> w(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            w[static_cast<size_t>(i) * n + j] = w1[i] * w1[j];
        }
    }
    return w;
}

namespace {

struct MergeWorkspace {
    int n = 0;
    int frames = 0;
    std::optional<Fft2d> fft;
    FftBuffer spatial;
    std::vector<FftBuffer> spectra;
    FftBuffer merged;
    FftBuffer result;
    std::vector<double> ref_tile;
    std::vector<double> alt_tile;

    void prepare(int tile_n, int frame_count) {
        if (tile_n == n && frame_count == frames) {
            return;
        }
        n = tile_n;
        frames = frame_count;
        const size_t bins = static_cast<size_t>(n) * n;
        fft.emplace(n, n);
        spatial = FftBuffer(bins);
        spectra.clear();
        for (int z = 0; z < frames; ++z) {
            spectra.emplace_back(bins);
        }
        merged = FftBuffer(bins);
        result = FftBuffer(bins);
        ref_tile.assign(bins, 0.0);
        alt_tile.assign(bins, 0.0);
    }
};

MergeWorkspace& merge_workspace(int n, int frames) {
    thread_local MergeWorkspace ws;
    ws.prepare(n, frames);
    return ws;
}

// Extracts the normalized color plane at CFA offset (dx, dy).
GrayImage extract_plane(const BayerFrame& frame, const BurstMetadata& meta, int dx, int dy) {
    const int w = frame.width / 2;
    const int h = frame.height / 2;
    GrayImage plane(w, h);
    for (int y = 0; y < h; ++y) {
        const uint16_t* src = frame.samples.data() + static_cast<size_t>(2 * y + dy) * frame.width + dx;
        double* dst = plane.row(y);
        for (int x = 0; x < w; ++x) {
            dst[x] = normalize_sample(src[2 * x], meta);
        }
    }
    return plane;
}

// Merges one color plane. Tile rows are computed in parallel; blending into
// the output happens afterwards in row-major tile order.
GrayImage merge_plane(const std::vector<GrayImage>& planes, int reference, const std::vector<MotionField>& fields,
                      const NoiseParams& np, const MergeConfig& cfg, ThreadPool* pool) {
    const GrayImage& ref = planes[reference];
    const int W = ref.width();
    const int H = ref.height();
    const int n = cfg.tile_size;
    const TileGrid grid = make_tile_grid(W, H, n);
    for (const MotionField& f : fields) {
        if (!(f.grid.tile_size == grid.tile_size && f.grid.tiles_x == grid.tiles_x &&
              f.grid.tiles_y == grid.tiles_y)) {
            throw Error("motion field grid does not match the merge tile grid (tile size " +
                        std::to_string(n) + ")");
        }
    }
    const size_t bins = static_cast<size_t>(n) * n;
    const int frames = static_cast<int>(planes.size());
    const double k = cfg.scale_factor();
    const double c = k * cfg.tau;
    const std::vector<double> window = raised_cosine_window(n);

    // Accumulators cover the grid extent, which starts half a tile before the image.
    const int acc_w = (grid.tiles_x + 1) * grid.stride;
    const int acc_h = (grid.tiles_y + 1) * grid.stride;
    GrayImage acc(acc_w, acc_h);
    GrayImage weight(acc_w, acc_h);

    std::vector<double> row_tiles(static_cast<size_t>(grid.tiles_x) * bins);
    for (int ty = 0; ty < grid.tiles_y; ++ty) {
        parallel_for(pool, 0, grid.tiles_x, [&](int tx) {
            MergeWorkspace& ws = merge_workspace(n, frames);
            const int ox = grid.origin_x(tx);
            const int oy = grid.origin_y(ty);
            extract_reflected(ref, ox, oy, n, n, ws.ref_tile.data());
            const double sigma2 = tile_noise_variance(ws.ref_tile, np);

            std::vector<const Complex*> alts;
            alts.reserve(frames - 1);
            int field_index = 0;
            for (int z = 0; z < frames; ++z) {
                const std::vector<double>* tile = &ws.ref_tile;
                if (z != reference) {
                    const MotionVector mv = fields[field_index++].at(tx, ty);
                    extract_reflected(planes[z], ox + static_cast<int>(std::lround(mv.u)),
                                      oy + static_cast<int>(std::lround(mv.v)), n, n, ws.alt_tile.data());
                    tile = &ws.alt_tile;
                }
                for (size_t b = 0; b < bins; ++b) {
                    ws.spatial[b] = Complex((*tile)[b], 0.0);
                }
                ws.fft->forward(ws.spatial.data(), ws.spectra[z].data());
                if (z != reference) {
                    alts.push_back(ws.spectra[z].data());
                }
            }
            temporal_merge_spectra(ws.spectra[reference].data(), alts, bins, c * sigma2, ws.merged.data());
            spatial_denoise_spectrum(ws.merged.span(), n, sigma2, frames, cfg);
            ws.fft->inverse(ws.merged.data(), ws.result.data());

            double* out = row_tiles.data() + static_cast<size_t>(tx) * bins;
            for (size_t b = 0; b < bins; ++b) {
                out[b] = ws.result[b].real() * window[b];
            }
        });
        for (int tx = 0; tx < grid.tiles_x; ++tx) {
            const double* tile = row_tiles.data() + static_cast<size_t>(tx) * bins;
            const int ax = grid.origin_x(tx) + grid.stride;
            const int ay = grid.origin_y(ty) + grid.stride;
            for (int j = 0; j < n; ++j) {
                double* arow = acc.row(ay + j) + ax;
                double* wrow = weight.row(ay + j) + ax;
                const double* wsrc = window.data() + static_cast<size_t>(j) * n;
                for (int i = 0; i < n; ++i) {
                    arow[i] += tile[static_cast<size_t>(j) * n + i];
                    wrow[i] += wsrc[i];
                }
            }
        }
    }

    GrayImage out(W, H);
    for (int y = 0; y < H; ++y) {
        const double* arow = acc.row(y + grid.stride) + grid.stride;
        const double* wrow = weight.row(y + grid.stride) + grid.stride;
        double* dst = out.row(y);
        for (int x = 0; x < W; ++x) {
            dst[x] = arow[x] / wrow[x];
        }
    }
    return out;
}

void check_merge_inputs(const RawBurst& burst, int reference, const std::vector<MotionField>& fields,
                        const NoiseParams& np, const MergeConfig& cfg) {
    validate(cfg);
    if (!(np.lambda_s >= 0.0) || !(np.lambda_r >= 0.0)) {
        throw Error("merge_burst: noise parameters must be non-negative");
    }
    if (burst.frames.empty()) {
        throw Error("merge_burst: empty burst");
    }
    if (reference < 0 || static_cast<size_t>(reference) >= burst.frames.size()) {
        throw Error("merge_burst: reference index out of range");
    }
    if (fields.size() + 1 != burst.frames.size()) {
        throw Error("merge_burst: need one motion field per alternate frame");
    }
    for (const BayerFrame& f : burst.frames) {
        validate_frame(f);
        if (f.width != burst.frames[0].width || f.height != burst.frames[0].height) {
            throw Error("merge_burst: frames differ in size");
        }
    }
}

}  // namespace

GrayImage merge_burst_normalized(const RawBurst& burst, int reference, const std::vector<MotionField>& fields,
                                 const NoiseParams& np, const MergeConfig& cfg, ThreadPool* pool) {
    check_merge_inputs(burst, reference, fields, np, cfg);
    const BayerFrame& ref = burst.frames[reference];
    GrayImage mosaic(ref.width, ref.height);
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            std::vector<GrayImage> planes;
            planes.reserve(burst.frames.size());
            for (const BayerFrame& f : burst.frames) {
                planes.push_back(extract_plane(f, burst.meta, dx, dy));
            }
            const GrayImage merged = merge_plane(planes, reference, fields, np, cfg, pool);
            for (int y = 0; y < merged.height(); ++y) {
                for (int x = 0; x < merged.width(); ++x) {
                    mosaic(2 * x + dx, 2 * y + dy) = merged(x, y);
                }
            }
        }
    }
    return mosaic;
}

BayerFrame merge_burst(const RawBurst& burst, int reference, const std::vector<MotionField>& fields,
                       const NoiseParams& np, const MergeConfig& cfg, ThreadPool* pool) {
    const GrayImage mosaic = merge_burst_normalized(burst, reference, fields, np, cfg, pool);
    const BayerFrame& ref = burst.frames[reference];
    BayerFrame out(ref.width, ref.height, ref.cfa);
    const double black = burst.meta.black_level;
    const double white = burst.meta.white_level;
    const double range = white - black;
    for (size_t i = 0; i < out.samples.size(); ++i) {
        const double v = std::clamp(std::round(black + mosaic.storage()[i] * range), black, white);
        out.samples[i] = static_cast<uint16_t>(v);
    }
    return out;
}

}  // namespace hdrplus

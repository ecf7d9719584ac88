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

#include "hdrplus/align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hdrplus/fft.hpp"

namespace hdrplus {

TileGrid make_tile_grid(int width, int height, int tile_size, int level) {
    if (tile_size < 2 || tile_size % 2 != 0) {
        throw Error("tile size must be even and >= 2, got " + std::to_string(tile_size));
    }
    if (width < 1 || height < 1) {
        throw Error("cannot tile an empty image");
    }
    TileGrid g;
    g.tile_size = tile_size;
    g.stride = tile_size / 2;
    g.tiles_x = (width + g.stride - 1) / g.stride + 1;
    g.tiles_y = (height + g.stride - 1) / g.stride + 1;
    g.level = level;
    return g;
}

void validate(const AlignmentConfig& cfg) {
    const size_t levels = cfg.factors.size() + 1;
    if (cfg.factors.empty()) {
        throw Error("alignment needs at least two pyramid levels");
    }
    if (cfg.tile_sizes.size() != levels || cfg.search_radii.size() != levels || cfg.norms.size() != levels) {
        throw Error("alignment tile_sizes, search radii and norms need one entry per pyramid level (" +
                    std::to_string(levels) + ")");
    }
    for (int f : cfg.factors) {
        if (f < 1) throw Error("pyramid factors must be >= 1");
    }
    for (int n : cfg.tile_sizes) {
        if (n < 2 || n % 2 != 0) throw Error("alignment tile sizes must be even and >= 2");
    }
    for (int r : cfg.search_radii) {
        if (r < 1) throw Error("search radii must be >= 1");
    }
    for (int p : cfg.norms) {
        if (p != 1 && p != 2) throw Error("norms must be 1 or 2");
    }
}

namespace {

// Scratch space for one (tile size, radius) combination, one per thread.
struct L2Workspace {
    int n = 0;
    int r = 0;
    int size = 0;
    std::optional<Fft2d> fft;
    FftBuffer tile_in, tile_f, area_in, area_f, prod, corr;
    std::vector<double> integral;

    void prepare(int tile_n, int radius) {
        if (tile_n == n && radius == r) {
            return;
        }
        n = tile_n;
        r = radius;
        size = n + 2 * r;
        const size_t count = static_cast<size_t>(size) * size;
        fft.emplace(size, size);
        tile_in = FftBuffer(count);
        tile_f = FftBuffer(count);
        area_in = FftBuffer(count);
        area_f = FftBuffer(count);
        prod = FftBuffer(count);
        corr = FftBuffer(count);
        integral.assign(static_cast<size_t>(size + 1) * (size + 1), 0.0);
    }
};

L2Workspace& l2_workspace(int n, int r) {
    thread_local L2Workspace ws;
    ws.prepare(n, r);
    return ws;
}

// tile: n×n, area: S×S with S = n + 2r, out: (2r+1)×(2r+1).
void l2_map_into(const double* tile, const double* area, int n, int r, double* out) {
    L2Workspace& ws = l2_workspace(n, r);
    const int S = ws.size;
    const int m = 2 * r + 1;

    double tile_energy = 0.0;
    for (int j = 0; j < S; ++j) {
        for (int i = 0; i < S; ++i) {
            const size_t k = static_cast<size_t>(j) * S + i;
            const double t = (i < n && j < n) ? tile[static_cast<size_t>(j) * n + i] : 0.0;
            tile_energy += t * t;
            ws.tile_in[k] = Complex(t, 0.0);
            ws.area_in[k] = Complex(area[k], 0.0);
        }
    }
    ws.fft->forward(ws.tile_in.data(), ws.tile_f.data());
    ws.fft->forward(ws.area_in.data(), ws.area_f.data());
    const size_t count = static_cast<size_t>(S) * S;
    for (size_t k = 0; k < count; ++k) {
        ws.prod[k] = std::conj(ws.tile_f[k]) * ws.area_f[k];
    }
    // corr(u, v) = sum T(i, j) I(i + u, j + v); no wrap-around for u, v <= 2r.
    ws.fft->inverse(ws.prod.data(), ws.corr.data());

    // Summed-area table of I^2.
    const int S1 = S + 1;
    double* sat = ws.integral.data();
    for (int j = 0; j < S; ++j) {
        double row_sum = 0.0;
        for (int i = 0; i < S; ++i) {
            const double a = area[static_cast<size_t>(j) * S + i];
            row_sum += a * a;
            sat[static_cast<size_t>(j + 1) * S1 + i + 1] = sat[static_cast<size_t>(j) * S1 + i + 1] + row_sum;
        }
    }
    for (int dv = 0; dv < m; ++dv) {
        for (int du = 0; du < m; ++du) {
            const double box = sat[static_cast<size_t>(dv + n) * S1 + du + n] - sat[static_cast<size_t>(dv) * S1 + du + n] -
                               sat[static_cast<size_t>(dv + n) * S1 + du] + sat[static_cast<size_t>(dv) * S1 + du];
            const double d = tile_energy + box - 2.0 * ws.corr[static_cast<size_t>(dv) * S + du].real();
            out[static_cast<size_t>(dv) * m + du] = std::max(0.0, d);
        }
    }
}

double l1_at(const double* tile, const double* area, int n, int S, int du, int dv) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        const double* t = tile + static_cast<size_t>(j) * n;
        const double* a = area + static_cast<size_t>(j + dv) * S + du;
        for (int i = 0; i < n; ++i) {
            acc += std::abs(t[i] - a[i]);
        }
    }
    return acc;
}

void l1_map_into(const double* tile, const double* area, int n, int r, double* out) {
    const int S = n + 2 * r;
    const int m = 2 * r + 1;
    for (int dv = 0; dv < m; ++dv) {
        for (int du = 0; du < m; ++du) {
            out[static_cast<size_t>(dv) * m + du] = l1_at(tile, area, n, S, du, dv);
        }
    }
}

bool exact_match(const double* tile, const double* area, int n, int S, int du, int dv) {
    for (int j = 0; j < n; ++j) {
        if (!std::equal(tile + static_cast<size_t>(j) * n, tile + static_cast<size_t>(j + 1) * n,
                        area + static_cast<size_t>(dv + j) * S + du)) {
            return false;
        }
    }
    return true;
}

// The last tile's center can sit past the edge; it may stay put or move inward.
double clamp_component(double value, int center, int extent) {
    return std::clamp(value, static_cast<double>(-center), static_cast<double>(std::max(0, extent - 1 - center)));
}

// Keep the displaced tile center inside the level image.
MotionVector clamp_vector(MotionVector mv, const TileGrid& g, int tx, int ty, int width, int height) {
    mv.u = clamp_component(mv.u, tx * g.stride, width);
    mv.v = clamp_component(mv.v, ty * g.stride, height);
    return mv;
}

MotionVector round_vector(const MotionVector& mv) {
    return {static_cast<double>(std::lround(mv.u)), static_cast<double>(std::lround(mv.v))};
}

}  // namespace

double tile_distance(const GrayImage& tile, const GrayImage& area, int u, int v, int norm) {
    const int n = tile.width();
    if (tile.height() != n) {
        throw Error("tile_distance: tile must be square");
    }
    if (u < 0 || v < 0 || u + n > area.width() || v + n > area.height()) {
        throw Error("tile_distance: candidate outside the search area");
    }
    if (norm != 1 && norm != 2) {
        throw Error("tile_distance: norm must be 1 or 2");
    }
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double d = tile(i, j) - area(u + i, v + j);
            acc += norm == 1 ? std::abs(d) : d * d;
        }
    }
    return acc;
}

GrayImage l2_distance_map(const GrayImage& tile, const GrayImage& area) {
    const int n = tile.width();
    if (tile.height() != n || area.width() != area.height() || area.width() < n ||
        (area.width() - n) % 2 != 0) {
        throw Error("l2_distance_map: area must be (n+2r)x(n+2r) for an n x n tile");
    }
    const int r = (area.width() - n) / 2;
    GrayImage out(2 * r + 1, 2 * r + 1);
    l2_map_into(tile.storage().data(), area.storage().data(), n, r, out.storage().data());
    return out;
}

std::optional<MotionVector> subpixel_refine(const GrayImage& window) {
    if (window.width() != 3 || window.height() != 3) {
        throw Error("subpixel_refine expects a 3x3 window");
    }
    // Least-squares fit of D(x, y) = 1/2 [x y] A [x y]^T + b.[x y] + c over
    // x, y in {-1, 0, 1} with uniform weights. The basis is orthogonal except
    // for {1, x^2, y^2}, which gives these closed forms.
    double s0 = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (int y = -1; y <= 1; ++y) {
        for (int x = -1; x <= 1; ++x) {
            const double d = window(x + 1, y + 1);
            s0 += d;
            sx += x * d;
            sy += y * d;
            sxx += x * x * d;
            syy += y * y * d;
            sxy += x * y * d;
        }
    }
    const double b1 = sx / 6.0;
    const double b2 = sy / 6.0;
    const double a12 = sxy / 4.0;
    const double a11 = 2.0 * (sxx / 2.0 - s0 / 3.0);
    const double a22 = 2.0 * (syy / 2.0 - s0 / 3.0);

    // Relative test: rounding leaves a tiny positive det on singular Hessians.
    const double det = a11 * a22 - a12 * a12;
    if (!(a11 > 0.0) || !(det > 1e-9 * a11 * a22) || !std::isfinite(det)) {
        return std::nullopt;
    }
    const MotionVector mu{-(a22 * b1 - a12 * b2) / det, -(a11 * b2 - a12 * b1) / det};
    if (!(std::hypot(mu.u, mu.v) < 1.0)) {
        return std::nullopt;
    }
    return mu;
}

MotionField upsample_motion_field(const MotionField& coarse, int scale, const TileGrid& fine_grid) {
    if (scale < 1) {
        throw Error("upsampling scale must be >= 1");
    }
    const TileGrid& cg = coarse.grid;
    MotionField fine(fine_grid);
    auto owner = [&](int t, int tiles) {
        // Nearest coarse tile center to the fine center t * stride_f / scale.
        const long num = 2L * t * fine_grid.stride + static_cast<long>(scale) * cg.stride;
        const long den = 2L * scale * cg.stride;
        return std::clamp(static_cast<int>(num / den), 0, tiles - 1);
    };
    for (int ty = 0; ty < fine_grid.tiles_y; ++ty) {
        const int cy = owner(ty, cg.tiles_y);
        for (int tx = 0; tx < fine_grid.tiles_x; ++tx) {
            const int cx = owner(tx, cg.tiles_x);
            const MotionVector& c = coarse.at(cx, cy);
            fine.at(tx, ty) = {c.u * scale, c.v * scale};
        }
    }
    return fine;
}

MotionVector select_candidate_guess(int tx, int ty, const TileGrid& fine_grid, const MotionField& coarse,
                                    int scale, const GrayImage& ref_level, const GrayImage& alt_level) {
    const TileGrid& cg = coarse.grid;
    const long fine_center_x = static_cast<long>(tx) * fine_grid.stride;  // fine px
    const long fine_center_y = static_cast<long>(ty) * fine_grid.stride;
    auto owner = [&](long center, int tiles) {
        const long num = 2L * center + static_cast<long>(scale) * cg.stride;
        const long den = 2L * scale * cg.stride;
        return std::clamp(static_cast<int>(num / den), 0, tiles - 1);
    };
    const int cx = owner(fine_center_x, cg.tiles_x);
    const int cy = owner(fine_center_y, cg.tiles_y);
    // Neighbour on the side of the coarse center the fine center falls on.
    const int nx = fine_center_x < static_cast<long>(cx) * cg.stride * scale ? cx - 1 : cx + 1;
    const int ny = fine_center_y < static_cast<long>(cy) * cg.stride * scale ? cy - 1 : cy + 1;

    std::vector<MotionVector> candidates;
    candidates.push_back(coarse.at(cx, cy));
    if (nx >= 0 && nx < cg.tiles_x) candidates.push_back(coarse.at(nx, cy));
    if (ny >= 0 && ny < cg.tiles_y) candidates.push_back(coarse.at(cx, ny));

    const int n = fine_grid.tile_size;
    const int ox = fine_grid.origin_x(tx);
    const int oy = fine_grid.origin_y(ty);
    std::vector<double> ref_tile(static_cast<size_t>(n) * n);
    std::vector<double> alt_tile(static_cast<size_t>(n) * n);
    extract_reflected(ref_level, ox, oy, n, n, ref_tile.data());

    MotionVector best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const MotionVector& c : candidates) {
        const MotionVector guess = clamp_vector(round_vector({c.u * scale, c.v * scale}), fine_grid, tx, ty,
                                                ref_level.width(), ref_level.height());
        extract_reflected(alt_level, ox + static_cast<int>(guess.u), oy + static_cast<int>(guess.v), n, n,
                          alt_tile.data());
        const double d = l1_at(ref_tile.data(), alt_tile.data(), n, n, 0, 0);
        if (d < best_d) {
            best_d = d;
            best = guess;
        }
    }
    return best;
}

MotionField align_level(const GrayImage& ref_level, const GrayImage& alt_level, const MotionField& init,
                        const LevelConfig& cfg, ThreadPool* pool) {
    const TileGrid& g = init.grid;
    if (g.tile_size != cfg.tile_size) {
        throw Error("align_level: initial field grid does not match the level tile size");
    }
    if (ref_level.width() != alt_level.width() || ref_level.height() != alt_level.height()) {
        throw Error("align_level: reference and alternate levels differ in size");
    }
    const int n = cfg.tile_size;
    const int r = cfg.search_radius;
    const int S = n + 2 * r;
    const int m = 2 * r + 1;
    const int W = ref_level.width();
    const int H = ref_level.height();

    MotionField out(g);
    parallel_for(pool, 0, g.tiles_y, [&](int ty) {
        std::vector<double> tile(static_cast<size_t>(n) * n);
        std::vector<double> area(static_cast<size_t>(S) * S);
        std::vector<double> dist(static_cast<size_t>(m) * m);
        std::vector<double> l2(static_cast<size_t>(m) * m);
        for (int tx = 0; tx < g.tiles_x; ++tx) {
            const MotionVector guess = clamp_vector(round_vector(init.at(tx, ty)), g, tx, ty, W, H);
            const int ox = g.origin_x(tx);
            const int oy = g.origin_y(ty);
            extract_reflected(ref_level, ox, oy, n, n, tile.data());
            extract_reflected(alt_level, ox + static_cast<int>(guess.u) - r, oy + static_cast<int>(guess.v) - r,
                              S, S, area.data());
            if (cfg.norm == 2) {
                l2_map_into(tile.data(), area.data(), n, r, dist.data());
            } else {
                l1_map_into(tile.data(), area.data(), n, r, dist.data());
            }
            // Lexicographic tie-break: smallest dv, then smallest du.
            int best = 0;
            for (int k = 1; k < m * m; ++k) {
                if (dist[k] < dist[best]) {
                    best = k;
                }
            }
            const int bu = best % m;
            const int bv = best / m;
            MotionVector mv{guess.u + (bu - r), guess.v + (bv - r)};

            // An exact integer match is already the true minimum; fitting a
            // quadratic to the surrounding non-quadratic surface would only bias it.
            if (cfg.subpixel && bu > 0 && bu < m - 1 && bv > 0 && bv < m - 1 &&
                !exact_match(tile.data(), area.data(), n, S, bu, bv)) {
                const double* d2 = dist.data();
                if (cfg.norm != 2) {
                    l2_map_into(tile.data(), area.data(), n, r, l2.data());
                    d2 = l2.data();
                }
                GrayImage window(3, 3);
                for (int j = 0; j < 3; ++j) {
                    for (int i = 0; i < 3; ++i) {
                        window(i, j) = d2[static_cast<size_t>(bv - 1 + j) * m + (bu - 1 + i)];
                    }
                }
                if (auto mu = subpixel_refine(window)) {
                    mv.u += mu->u;
                    mv.v += mu->v;
                }
            }
            out.at(tx, ty) = clamp_vector(mv, g, tx, ty, W, H);
        }
    });
    return out;
}

std::vector<MotionField> align_burst(const std::vector<Pyramid>& pyramids, const AlignmentConfig& cfg,
                                     ThreadPool* pool, std::vector<std::vector<MotionField>>* per_level) {
    validate(cfg);
    if (pyramids.size() < 2) {
        throw Error("align_burst needs a reference and at least one alternate");
    }
    const int levels = cfg.levels();
    for (const Pyramid& p : pyramids) {
        if (static_cast<int>(p.levels.size()) != levels) {
            throw Error("pyramid depth does not match the alignment configuration");
        }
        for (int l = 0; l < levels; ++l) {
            if (p.levels[l].width() != pyramids[0].levels[l].width() ||
                p.levels[l].height() != pyramids[0].levels[l].height()) {
                throw Error("burst pyramids differ in level sizes");
            }
        }
    }

    const Pyramid& ref = pyramids[0];
    std::vector<MotionField> result;
    if (per_level) {
        per_level->clear();
    }
    for (size_t k = 1; k < pyramids.size(); ++k) {
        const Pyramid& alt = pyramids[k];
        std::vector<MotionField> trace;
        MotionField previous;
        for (int l = 0; l < levels; ++l) {
            const GrayImage& ref_l = ref.levels[l];
            const GrayImage& alt_l = alt.levels[l];
            const TileGrid grid = make_tile_grid(ref_l.width(), ref_l.height(), cfg.tile_sizes[l], l);
            MotionField init(grid);
            if (l > 0) {
                // factors are listed finest step first.
                const int scale = cfg.factors[levels - 1 - l];
                parallel_for(pool, 0, grid.tiles_y, [&](int ty) {
                    for (int tx = 0; tx < grid.tiles_x; ++tx) {
                        init.at(tx, ty) = select_candidate_guess(tx, ty, grid, previous, scale, ref_l, alt_l);
                    }
                });
            }
            const bool finest = l == levels - 1;
            const LevelConfig lc{cfg.tile_sizes[l], cfg.search_radii[l], cfg.norms[l], cfg.subpixel && !finest};
            previous = align_level(ref_l, alt_l, init, lc, pool);
            if (per_level) {
                trace.push_back(previous);
            }
        }
        result.push_back(previous);
        if (per_level) {
            per_level->push_back(std::move(trace));
        }
    }
    return result;
}

}  // namespace hdrplus

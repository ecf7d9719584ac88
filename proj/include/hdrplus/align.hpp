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

#pragma once

#include <optional>
#include <vector>

#include "hdrplus/image.hpp"
#include "hdrplus/pyramid.hpp"
#include "hdrplus/thread_pool.hpp"

namespace hdrplus {

/// Half-overlapped square tiling of one image. Tile t starts at
/// (t - 1) * stride, so the grid begins half a tile outside the image and
/// every pixel is covered by exactly two tiles per dimension. The center of
/// tile t sits at t * stride.
struct TileGrid {
    int tile_size = 16;
    int stride = 8;
    int tiles_x = 0;
    int tiles_y = 0;
    int level = 0;

    int origin_x(int tx) const { return (tx - 1) * stride; }
    int origin_y(int ty) const { return (ty - 1) * stride; }
    int count() const { return tiles_x * tiles_y; }

    bool operator==(const TileGrid&) const = default;
};

TileGrid make_tile_grid(int width, int height, int tile_size, int level = 0);

/// Displacement (u horizontal, v vertical) such that reference content at
/// (x, y) is found at (x + u, y + v) in the alternate frame.
struct MotionVector {
    double u = 0.0;
    double v = 0.0;

    bool operator==(const MotionVector&) const = default;
};

struct MotionField {
    TileGrid grid;
    std::vector<MotionVector> vectors;  // tiles_y × tiles_x, row-major

    MotionField() = default;
    explicit MotionField(const TileGrid& g) : grid(g), vectors(static_cast<size_t>(g.count())) {}

    MotionVector& at(int tx, int ty) { return vectors[static_cast<size_t>(ty) * grid.tiles_x + tx]; }
    const MotionVector& at(int tx, int ty) const {
        return vectors[static_cast<size_t>(ty) * grid.tiles_x + tx];
    }

    bool operator==(const MotionField&) const = default;
};

/// Per-level settings are listed coarsest level first.
struct AlignmentConfig {
    std::vector<int> factors{2, 4, 4};  // finest step first, as in build_pyramid
    std::vector<int> tile_sizes{8, 16, 16, 16};
    std::vector<int> search_radii{4, 4, 4, 4};
    std::vector<int> norms{2, 2, 2, 1};
    bool subpixel = true;  // never applied at the finest level

    int levels() const { return static_cast<int>(factors.size()) + 1; }
};

void validate(const AlignmentConfig& cfg);

struct LevelConfig {
    int tile_size = 16;
    int search_radius = 4;
    int norm = 2;
    bool subpixel = false;
};

/// Sum over the n×n tile of |tile(i, j) - area(u + i, v + j)|^norm, where
/// (u, v) is the candidate's top-left corner inside `area`.
double tile_distance(const GrayImage& tile, const GrayImage& area, int u, int v, int norm);

/// L2 distance of `tile` (n×n) against every placement inside `area`
/// ((n+2r)×(n+2r)), using sum(T^2) + boxfilter(I^2) - 2 xcorr(T, I) with the
/// correlation done by FFT. Entry (r + du, r + dv) holds displacement (du, dv).
GrayImage l2_distance_map(const GrayImage& tile, const GrayImage& area);

/// Minimum of the least-squares quadratic fitted to a 3×3 window of L2
/// distances centered on the integer minimum (window(1, 1)). Returns the
/// (du, dv) offset, or nullopt when the fit is not positive definite or the
/// offset is a pixel or more away.
std::optional<MotionVector> subpixel_refine(const GrayImage& window);

/// Scales `coarse` by `scale` onto `fine_grid`. Each fine tile takes the
/// vector of the coarse tile whose stride cell contains its center.
MotionField upsample_motion_field(const MotionField& coarse, int scale, const TileGrid& fine_grid);

/// Picks the initial guess for fine tile (tx, ty) among the owning coarse
/// tile and its nearest horizontal and vertical neighbours, minimizing the L1
/// distance between the reference tile and the displaced alternate tile.
/// Returns the winning scaled vector rounded to integers.
MotionVector select_candidate_guess(int tx, int ty, const TileGrid& fine_grid, const MotionField& coarse,
                                    int scale, const GrayImage& ref_level, const GrayImage& alt_level);

/// One coarse-to-fine step: init + argmin of the distance over the search
/// window, plus optional subpixel refinement.
MotionField align_level(const GrayImage& ref_level, const GrayImage& alt_level, const MotionField& init,
                        const LevelConfig& cfg, ThreadPool* pool = nullptr);

/// Aligns every alternate pyramid (index >= 1) to pyramids[0]. Returns one
/// finest-level field per alternate; vectors are integers in grayscale
/// pixels (2× on the Bayer mosaic). If `per_level` is given it receives every
/// level's field for each alternate, coarsest first.
std::vector<MotionField> align_burst(const std::vector<Pyramid>& pyramids, const AlignmentConfig& cfg,
                                     ThreadPool* pool = nullptr,
                                     std::vector<std::vector<MotionField>>* per_level = nullptr);

}  // namespace hdrplus

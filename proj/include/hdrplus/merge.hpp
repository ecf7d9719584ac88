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

#include <vector>

#include "hdrplus/align.hpp"
#include "hdrplus/burst_io.hpp"
#include "hdrplus/fft.hpp"
#include "hdrplus/image.hpp"
#include "hdrplus/thread_pool.hpp"

namespace hdrplus {

struct MergeConfig {
    int tile_size = 16;
    double tau = 75.0;  // temporal strength
    double s = 0.1;     // spatial strength

    /// Wiener scaling factor k = n^2 * (1/4^2) * 2.
    double scale_factor() const { return tile_size * tile_size / 16.0 * 2.0; }
};

void validate(const MergeConfig& cfg);

/// Reference tile first, then one aligned tile per alternate frame; each n×n.
struct TileStack {
    int tile_size = 0;
    std::vector<std::vector<double>> tiles;
};

/// Root-mean-square of the tile values.
double tile_rms(std::span<const double> tile);

/// sigma^2 = lambda_s * rms(reference) + lambda_r.
double tile_noise_variance(std::span<const double> reference_tile, const NoiseParams& np);

/// Pairwise Wiener temporal merge in the DFT domain. Returns the merged
/// (unnormalized) spectrum of the reference tile.
FftBuffer temporal_merge_stack(const TileStack& stack, double sigma2, const MergeConfig& cfg);

/// Per-bin shrinkage |X|^2 / (|X|^2 + f(w) sigma^2 / N) with f(w) = (k/2) s |w|,
/// |w| measured on wrap-around frequency indices. Operates in place.
void spatial_denoise_spectrum(std::span<Complex> spectrum, int tile_size, double sigma2, int frames,
                              const MergeConfig& cfg);

/// 1D window w(x) = 1/2 - 1/2 cos(2 pi (x + 1/2) / n); sums to one when
/// copies are shifted by n/2.
std::vector<double> raised_cosine_window_1d(int n);

/// Separable n×n blending window, row-major.
std::vector<double> raised_cosine_window(int n);

/// Aligns each color plane's tiles with `fields` (one per alternate, in burst
/// order skipping the reference), merges, and re-interleaves a mosaic with the
/// input levels. `reference` selects the anchor frame.
BayerFrame merge_burst(const RawBurst& burst, int reference, const std::vector<MotionField>& fields,
                       const NoiseParams& np, const MergeConfig& cfg, ThreadPool* pool = nullptr);

/// Same as merge_burst but returns the normalized real-valued mosaic before
/// quantization.
GrayImage merge_burst_normalized(const RawBurst& burst, int reference, const std::vector<MotionField>& fields,
                                 const NoiseParams& np, const MergeConfig& cfg, ThreadPool* pool = nullptr);

}  // namespace hdrplus

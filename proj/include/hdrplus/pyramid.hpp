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

#include "hdrplus/burst_io.hpp"
#include "hdrplus/image.hpp"

namespace hdrplus {

/// Gaussian pyramid, coarsest level first. levels.back() is the input image.
struct Pyramid {
    std::vector<GrayImage> levels;
    /// Downsampling factor between consecutive levels, listed finest step
    /// first (e.g. {2, 4, 4}); factors[i] takes level size-1-i to size-2-i.
    std::vector<int> factors;
};

/// Normalized black-subtracted sample: (x - black) / (white - black).
inline double normalize_sample(uint16_t x, const BurstMetadata& meta) {
    return (static_cast<double>(x) - meta.black_level) /
           static_cast<double>(meta.white_level - meta.black_level);
}

/// Half-resolution grayscale: mean of each 2×2 CFA cell of normalized samples.
GrayImage bayer_to_gray(const BayerFrame& frame, const BurstMetadata& meta);

/// Separable truncated Gaussian blur (reflect borders, kernel sums to 1).
GrayImage gaussian_blur(const GrayImage& img, double sigma, int radius);

/// Low-pass (sigma = factor / 2, radius = 2 sigma) then keep every
/// factor-th sample. Output size is ceil(size / factor).
GrayImage gaussian_downsample(const GrayImage& img, int factor);

/// Throws if the image is smaller than the product of `factors`.
Pyramid build_pyramid(const GrayImage& img, const std::vector<int>& factors = {2, 4, 4});

}  // namespace hdrplus

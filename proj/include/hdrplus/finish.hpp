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

#include <array>

#include "hdrplus/burst_io.hpp"
#include "hdrplus/image.hpp"

namespace hdrplus {

/// Three full-resolution channel planes (R, G, B).
struct RgbImage {
    std::array<GrayImage, 3> channels;

    RgbImage() = default;
    RgbImage(int width, int height, double fill = 0.0)
        : channels{GrayImage(width, height, fill), GrayImage(width, height, fill), GrayImage(width, height, fill)} {}

    int width() const { return channels[0].width(); }
    int height() const { return channels[0].height(); }
};

struct FinishConfig {
    double synthetic_gain = 8.0;
    double contrast_alpha = 0.08;
    std::array<double, 3> sharpen_amounts{1.0, 0.5, 0.5};
    std::array<double, 3> sharpen_sigmas{1.0, 2.0, 4.0};
    std::array<double, 3> sharpen_thresholds{0.02, 0.04, 0.06};
    /// Skip tone mapping, contrast and sharpening.
    bool minimal = false;
};

void validate(const FinishConfig& cfg);

/// Largest contrast alpha for which the S-curve stays monotone on [0, 1].
inline constexpr double kMaxContrastAlpha = 0.15915494309189535;  // 1 / (2 pi)

/// (x - black) / (white - black), clamped to [0, 1].
GrayImage normalize_black_white(const BayerFrame& frame, const BurstMetadata& meta);

/// Multiplies each CFA site by its channel gain (R, G1, G2, B), clamps to [0, 1].
GrayImage white_balance(const GrayImage& mosaic, Cfa cfa, const std::array<double, 4>& gains);

/// Gradient-corrected bilinear demosaicking with 5×5 kernels.
RgbImage demosaic(const GrayImage& mosaic, Cfa cfa);

/// Per-pixel 3×3 (row-major) matrix multiply, clamped to [0, 1].
RgbImage color_correct(const RgbImage& img, const std::array<double, 9>& matrix);

double srgb_encode(double x);
double srgb_decode(double y);
RgbImage srgb_encode(const RgbImage& img);

/// Exposure fusion of two synthetic exposures of the gray image (gamma
/// encoded, and gamma encoded after `gain`), weighted by well-exposedness
/// only. Returns the fused gray, gamma-encoded.
GrayImage fuse_exposures(const GrayImage& gray, double gain);

/// Local tone mapping preserving per-pixel chroma ratios.
RgbImage tone_map(const RgbImage& img, double gain);

double s_curve(double x, double alpha);
RgbImage s_curve_contrast(const RgbImage& img, double alpha);

/// Mean of three thresholded unsharp masks.
RgbImage sharpen(const RgbImage& img, const FinishConfig& cfg);

uint8_t quantize8(double x);
Rgb8Image quantize8(const RgbImage& img);

/// Display-referred RGB in [0, 1] before 8-bit quantization.
RgbImage finish_to_rgb(const BayerFrame& frame, const BurstMetadata& meta, const FinishConfig& cfg);

Rgb8Image finish_pipeline(const BayerFrame& frame, const BurstMetadata& meta, const FinishConfig& cfg);

}  // namespace hdrplus

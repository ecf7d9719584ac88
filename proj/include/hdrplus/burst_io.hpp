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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hdrplus/image.hpp"

namespace hdrplus {

enum class Cfa { RGGB, BGGR, GRBG, GBRG };

/// Color channel of a CFA site. G1 is the green on the even row of the
/// 2×2 cell, G2 the green on the odd row.
enum class CfaChannel { R = 0, G1 = 1, G2 = 2, B = 3 };

Cfa parse_cfa(const std::string& name);
std::string to_string(Cfa cfa);

/// Channel at CFA cell position (dx, dy), each in {0, 1}.
CfaChannel cfa_channel(Cfa cfa, int dx, int dy);

struct BayerFrame {
    int width = 0;
    int height = 0;
    std::vector<uint16_t> samples;  // row-major
    Cfa cfa = Cfa::RGGB;

    BayerFrame() = default;
    BayerFrame(int w, int h, Cfa c, uint16_t fill = 0)
        : width(w), height(h), samples(static_cast<size_t>(w) * h, fill), cfa(c) {}

    uint16_t& at(int x, int y) { return samples[static_cast<size_t>(y) * width + x]; }
    uint16_t at(int x, int y) const { return samples[static_cast<size_t>(y) * width + x]; }

    bool operator==(const BayerFrame&) const = default;
};

/// Variance model sigma^2(x) = lambda_s * x + lambda_r, x normalized to [0, 1].
struct NoiseParams {
    double lambda_s = 1e-4;
    double lambda_r = 1e-6;

    bool operator==(const NoiseParams&) const = default;
};

struct BurstMetadata {
    double iso = 100.0;
    int black_level = 0;
    int white_level = 65535;
    std::array<double, 4> wb_gains{1.0, 1.0, 1.0, 1.0};  // R, G1, G2, B
    std::array<double, 9> color_matrix{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
    std::optional<NoiseParams> noise_profile;
    int ref_index = 0;
    Cfa cfa = Cfa::RGGB;

    bool operator==(const BurstMetadata&) const = default;
};

struct RawBurst {
    std::vector<BayerFrame> frames;
    BurstMetadata meta;
};

void validate_frame(const BayerFrame& frame);
void validate_metadata(const BurstMetadata& meta, size_t burst_length);
void validate_noise_params(const NoiseParams& np);

/// Loads `frame_<k>.pgm` files (ordered by k) and `burst.json` from `dir`.
RawBurst load_burst(const std::filesystem::path& dir);

BurstMetadata load_metadata(const std::filesystem::path& file);
void write_metadata(const BurstMetadata& meta, const std::filesystem::path& file);

/// Writes a burst directory readable by load_burst.
void write_burst(const RawBurst& burst, const std::filesystem::path& dir);

/// Noise parameters in effect for the burst: the metadata profile if present,
/// otherwise the ISO-100 baseline scaled by alpha = iso / 100
/// (lambda_s * alpha, lambda_r * alpha^2).
NoiseParams derive_noise_params(const BurstMetadata& meta, const NoiseParams& baseline);

// Binary PGM (P5). Frames are written with maxval 65535, big-endian samples.
BayerFrame read_raw16(const std::filesystem::path& path, Cfa cfa = Cfa::RGGB);
void write_raw16(const BayerFrame& frame, const std::filesystem::path& path);
void write_gray16(const Image<uint16_t>& img, const std::filesystem::path& path);

// 8-bit RGB PNG.
void write_rgb8(const Rgb8Image& image, const std::filesystem::path& path);
Rgb8Image read_rgb8(const std::filesystem::path& path);

}  // namespace hdrplus

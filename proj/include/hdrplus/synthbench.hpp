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

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hdrplus/burst_io.hpp"
#include "hdrplus/image.hpp"
#include "hdrplus/pipeline.hpp"

namespace hdrplus {

enum class SceneKind {
    textured,  // gradients, shapes, gratings, glyph strokes and fine texture
    constant,  // every site at `constant_level`
};

/// Integer displacement of a frame on the full mosaic.
struct Shift {
    int dx = 0;
    int dy = 0;

    bool operator==(const Shift&) const = default;
};

struct SynthSpec {
    int width = 1024;
    int height = 768;
    SceneKind scene = SceneKind::textured;
    double constant_level = 0.5;
    std::vector<Shift> shifts;  // one per frame, shifts[0] == {0, 0}
    NoiseParams noise{4e-4, 1.6e-5};
    uint64_t seed = 1;
    int black_level = 1024;
    int white_level = 16383;
    Cfa cfa = Cfa::RGGB;

    int frames() const { return static_cast<int>(shifts.size()); }
};

/// N frames with random even shifts of magnitude <= max_shift (reference static).
SynthSpec default_synth_spec(int frames = 8, uint64_t seed = 1, int max_shift = 8);

/// N static frames with the default noise.
SynthSpec static_synth_spec(int frames, uint64_t seed = 1);

/// Deterministic mosaic-domain scene with values in [0.05, 0.95].
GrayImage generate_clean_scene(int width, int height, uint64_t seed);

struct SynthBurst {
    RawBurst burst;
    GrayImage clean;  // normalized ground truth aligned with frame 0
};

/// Frame z = clean scene moved by shifts[z] plus Normal(0, lambda_s x + lambda_r)
/// noise, quantized to the declared levels.
SynthBurst synthesize_burst(const SynthSpec& spec);

/// 10 log10(peak^2 / MSE); +infinity when the inputs are identical.
double psnr(std::span<const double> a, std::span<const double> b, double peak = 1.0);

/// PSNR of two raw frames after normalizing each with `meta`.
double psnr(const BayerFrame& a, const GrayImage& clean, const BurstMetadata& meta);

struct SynthReport {
    double psnr_ref = 0.0;
    double psnr_merged = 0.0;
    double gain_db = 0.0;
    double alignment_accuracy = 0.0;
    int frames = 0;
};

/// Runs align + merge on the synthesized burst and scores it against the
/// clean scene. Alignment accuracy is the fraction of interior finest-level
/// tiles whose vector equals the true shift (in grayscale pixels).
SynthReport evaluate_pipeline(const SynthSpec& spec, const PipelineConfig& cfg, ThreadPool* pool = nullptr);

/// Fraction of tiles fully inside the frame (before and after the true
/// displacement) whose vector equals `truth`.
double alignment_accuracy(const MotionField& field, int width, int height, const MotionVector& truth);

}  // namespace hdrplus

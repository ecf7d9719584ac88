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

#include "hdrplus/pyramid.hpp"

#include <cmath>
#include <string>

namespace hdrplus {

GrayImage bayer_to_gray(const BayerFrame& frame, const BurstMetadata& meta) {
    validate_frame(frame);
    const int w = frame.width / 2;
    const int h = frame.height / 2;
    const double scale = 1.0 / static_cast<double>(meta.white_level - meta.black_level);
    const double black = meta.black_level;
    GrayImage gray(w, h);
    for (int y = 0; y < h; ++y) {
        const uint16_t* r0 = frame.samples.data() + static_cast<size_t>(2 * y) * frame.width;
        const uint16_t* r1 = r0 + frame.width;
        double* out = gray.row(y);
        for (int x = 0; x < w; ++x) {
            const double sum = (r0[2 * x] - black) + (r0[2 * x + 1] - black) + (r1[2 * x] - black) +
                               (r1[2 * x + 1] - black);
            out[x] = 0.25 * sum * scale;
        }
    }
    return gray;
}

namespace {

std::vector<double> gaussian_kernel(double sigma, int radius) {
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma, int radius) {
    const int w = img.width();
    const int h = img.height();
    const std::vector<double> k = gaussian_kernel(sigma, radius);

    GrayImage tmp(w, h);
    std::vector<double> line(w + 2 * radius);
    for (int y = 0; y < h; ++y) {
        const double* src = img.row(y);
        for (int i = 0; i < w + 2 * radius; ++i) {
            line[i] = src[reflect_index(i - radius, w)];
        }
        double* dst = tmp.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = 0; t <= 2 * radius; ++t) {
                acc += k[t] * line[x + t];
            }
            dst[x] = acc;
        }
    }

    GrayImage out(w, h);
    std::vector<const double*> rows(2 * radius + 1);
    for (int y = 0; y < h; ++y) {
        for (int t = 0; t <= 2 * radius; ++t) {
            rows[t] = tmp.row(reflect_index(y + t - radius, h));
        }
        double* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int t = 0; t <= 2 * radius; ++t) {
                acc += k[t] * rows[t][x];
            }
            dst[x] = acc;
        }
    }
    return out;
}

GrayImage gaussian_downsample(const GrayImage& img, int factor) {
    if (factor < 1) {
        throw Error("downsampling factor must be >= 1");
    }
    if (factor == 1) {
        return img;
    }
    const double sigma = factor / 2.0;
    const int radius = static_cast<int>(std::ceil(2.0 * sigma));
    const GrayImage blurred = gaussian_blur(img, sigma, radius);
    const int w = (img.width() + factor - 1) / factor;
    const int h = (img.height() + factor - 1) / factor;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const double* src = blurred.row(y * factor);
        double* dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            dst[x] = src[x * factor];
        }
    }
    return out;
}

Pyramid build_pyramid(const GrayImage& img, const std::vector<int>& factors) {
    if (factors.empty()) {
        throw Error("pyramid needs at least one downsampling factor");
    }
    long product = 1;
    for (int f : factors) {
        if (f < 1) {
            throw Error("pyramid factors must be >= 1");
        }
        product *= f;
    }
    if (img.width() < product || img.height() < product) {
        throw Error("burst image too small: " + std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " cannot be downsampled by " + std::to_string(product));
    }
    Pyramid pyr;
    pyr.factors = factors;
    std::vector<GrayImage> fine_to_coarse;
    fine_to_coarse.push_back(img);
    for (int f : factors) {
        fine_to_coarse.push_back(gaussian_downsample(fine_to_coarse.back(), f));
    }
    pyr.levels.assign(fine_to_coarse.rbegin(), fine_to_coarse.rend());
    return pyr;
}

}  // namespace hdrplus

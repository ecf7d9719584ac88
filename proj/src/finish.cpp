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

#include "hdrplus/finish.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hdrplus/pyramid.hpp"

namespace hdrplus {

namespace {

inline double clamp01(double v) {
    // NaN maps to 0.
    return v > 0.0 ? (v < 1.0 ? v : 1.0) : 0.0;
}

template <typename Fn>
RgbImage map_channels(const RgbImage& img, Fn fn) {
    RgbImage out(img.width(), img.height());
    for (int c = 0; c < 3; ++c) {
        const auto& src = img.channels[c].storage();
        auto& dst = out.channels[c].storage();
        for (size_t i = 0; i < src.size(); ++i) {
            dst[i] = fn(src[i]);
        }
    }
    return out;
}

}  // namespace

void validate(const FinishConfig& cfg) {
    if (!(cfg.synthetic_gain >= 1.0) || !std::isfinite(cfg.synthetic_gain)) {
        throw Error("synthetic gain must be >= 1");
    }
    if (!(cfg.contrast_alpha >= 0.0) || !std::isfinite(cfg.contrast_alpha)) {
        throw Error("contrast alpha must be >= 0");
    }
    for (int m = 0; m < 3; ++m) {
        if (!(cfg.sharpen_sigmas[m] > 0.0) || !std::isfinite(cfg.sharpen_sigmas[m])) {
            throw Error("sharpening sigmas must be positive");
        }
        if (!(cfg.sharpen_thresholds[m] >= 0.0)) {
            throw Error("sharpening thresholds must be >= 0");
        }
        if (!std::isfinite(cfg.sharpen_amounts[m])) {
            throw Error("sharpening amounts must be finite");
        }
    }
}

GrayImage normalize_black_white(const BayerFrame& frame, const BurstMetadata& meta) {
    validate_frame(frame);
    GrayImage out(frame.width, frame.height);
    for (size_t i = 0; i < frame.samples.size(); ++i) {
        out.storage()[i] = clamp01(normalize_sample(frame.samples[i], meta));
    }
    return out;
}

GrayImage white_balance(const GrayImage& mosaic, Cfa cfa, const std::array<double, 4>& gains) {
    GrayImage out(mosaic.width(), mosaic.height());
    for (int y = 0; y < mosaic.height(); ++y) {
        for (int x = 0; x < mosaic.width(); ++x) {
            const double g = gains[static_cast<int>(cfa_channel(cfa, x, y))];
            out(x, y) = clamp01(mosaic(x, y) * g);
        }
    }
    return out;
}

RgbImage demosaic(const GrayImage& mosaic, Cfa cfa) {
    const int W = mosaic.width();
    const int H = mosaic.height();
    constexpr int pad = 2;
    const int PW = W + 2 * pad;
    // Reflection keeps CFA parity, so padded sites keep their color.
    std::vector<double> p(static_cast<size_t>(PW) * (H + 2 * pad));
    for (int y = -pad; y < H + pad; ++y) {
        const double* src = mosaic.row(reflect_index(y, H));
        double* dst = p.data() + static_cast<size_t>(y + pad) * PW + pad;
        for (int x = -pad; x < W + pad; ++x) {
            dst[x] = src[reflect_index(x, W)];
        }
    }
    auto at = [&](int x, int y) { return p[static_cast<size_t>(y + pad) * PW + x + pad]; };

    auto green_at_rb = [&](int x, int y) {
        return (4.0 * at(x, y) + 2.0 * (at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1)) -
                (at(x - 2, y) + at(x + 2, y) + at(x, y - 2) + at(x, y + 2))) /
               8.0;
    };
    // Color whose samples sit left/right of this green site.
    auto rb_at_green_row = [&](int x, int y) {
        return (5.0 * at(x, y) + 4.0 * (at(x - 1, y) + at(x + 1, y)) - (at(x - 2, y) + at(x + 2, y)) -
                (at(x - 1, y - 1) + at(x + 1, y - 1) + at(x - 1, y + 1) + at(x + 1, y + 1)) +
                0.5 * (at(x, y - 2) + at(x, y + 2))) /
               8.0;
    };
    // Color whose samples sit above/below this green site.
    auto rb_at_green_col = [&](int x, int y) {
        return (5.0 * at(x, y) + 4.0 * (at(x, y - 1) + at(x, y + 1)) - (at(x, y - 2) + at(x, y + 2)) -
                (at(x - 1, y - 1) + at(x + 1, y - 1) + at(x - 1, y + 1) + at(x + 1, y + 1)) +
                0.5 * (at(x - 2, y) + at(x + 2, y))) /
               8.0;
    };
    // Red at blue sites and blue at red sites.
    auto rb_at_br = [&](int x, int y) {
        return (6.0 * at(x, y) + 2.0 * (at(x - 1, y - 1) + at(x + 1, y - 1) + at(x - 1, y + 1) + at(x + 1, y + 1)) -
                1.5 * (at(x - 2, y) + at(x + 2, y) + at(x, y - 2) + at(x, y + 2))) /
               8.0;
    };

    RgbImage out(W, H);
    auto& R = out.channels[0];
    auto& G = out.channels[1];
    auto& B = out.channels[2];
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const CfaChannel ch = cfa_channel(cfa, x, y);
            const double v = at(x, y);
            double r, g, b;
            if (ch == CfaChannel::R) {
                r = v;
                g = green_at_rb(x, y);
                b = rb_at_br(x, y);
            } else if (ch == CfaChannel::B) {
                b = v;
                g = green_at_rb(x, y);
                r = rb_at_br(x, y);
            } else {
                g = v;
                const bool red_in_row = cfa_channel(cfa, x + 1, y) == CfaChannel::R;
                const double horiz = rb_at_green_row(x, y);
                const double vert = rb_at_green_col(x, y);
                r = red_in_row ? horiz : vert;
                b = red_in_row ? vert : horiz;
            }
            R(x, y) = clamp01(r);
            G(x, y) = clamp01(g);
            B(x, y) = clamp01(b);
        }
    }
    return out;
}

RgbImage color_correct(const RgbImage& img, const std::array<double, 9>& m) {
    RgbImage out(img.width(), img.height());
    const auto& r = img.channels[0].storage();
    const auto& g = img.channels[1].storage();
    const auto& b = img.channels[2].storage();
    for (size_t i = 0; i < r.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            out.channels[c].storage()[i] = clamp01(m[3 * c] * r[i] + m[3 * c + 1] * g[i] + m[3 * c + 2] * b[i]);
        }
    }
    return out;
}

double srgb_encode(double x) {
    x = clamp01(x);
    return x <= 0.0031308 ? 12.92 * x : 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

double srgb_decode(double y) {
    y = clamp01(y);
    return y <= 0.04045 ? y / 12.92 : std::pow((y + 0.055) / 1.055, 2.4);
}

RgbImage srgb_encode(const RgbImage& img) {
    return map_channels(img, [](double v) { return clamp01(srgb_encode(v)); });
}

// ---------------------------------------------------------------------------
// Exposure fusion

namespace {

// 5-tap binomial blur, reflect borders.
GrayImage binomial_blur(const GrayImage& img) {
    static constexpr double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const int W = img.width();
    const int H = img.height();
    GrayImage tmp(W, H);
    for (int y = 0; y < H; ++y) {
        const double* src = img.row(y);
        double* dst = tmp.row(y);
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) {
                acc += k[t + 2] * src[reflect_index(x + t, W)];
            }
            dst[x] = acc;
        }
    }
    GrayImage out(W, H);
    for (int y = 0; y < H; ++y) {
        double* dst = out.row(y);
        for (int x = 0; x < W; ++x) {
            double acc = 0.0;
            for (int t = -2; t <= 2; ++t) {
                acc += k[t + 2] * tmp(x, reflect_index(y + t, H));
            }
            dst[x] = acc;
        }
    }
    return out;
}

GrayImage pyr_down(const GrayImage& img) {
    const GrayImage blurred = binomial_blur(img);
    const int w = (img.width() + 1) / 2;
    const int h = (img.height() + 1) / 2;
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out(x, y) = blurred(2 * x, 2 * y);
        }
    }
    return out;
}

GrayImage pyr_up(const GrayImage& img, int width, int height) {
    GrayImage up(width, height);
    for (int y = 0; y < img.height() && 2 * y < height; ++y) {
        for (int x = 0; x < img.width() && 2 * x < width; ++x) {
            up(2 * x, 2 * y) = 4.0 * img(x, y);
        }
    }
    return binomial_blur(up);
}

std::vector<GrayImage> gaussian_pyramid(const GrayImage& img, int depth) {
    std::vector<GrayImage> pyr{img};
    for (int i = 1; i < depth; ++i) {
        pyr.push_back(pyr_down(pyr.back()));
    }
    return pyr;
}

std::vector<GrayImage> laplacian_pyramid(const GrayImage& img, int depth) {
    std::vector<GrayImage> g = gaussian_pyramid(img, depth);
    for (int i = 0; i + 1 < depth; ++i) {
        const GrayImage up = pyr_up(g[i + 1], g[i].width(), g[i].height());
        for (size_t k = 0; k < g[i].size(); ++k) {
            g[i].storage()[k] -= up.storage()[k];
        }
    }
    return g;
}

double well_exposedness(double v) {
    constexpr double sigma = 0.2;
    return std::exp(-(v - 0.5) * (v - 0.5) / (2.0 * sigma * sigma));
}

}  // namespace

GrayImage fuse_exposures(const GrayImage& gray, double gain) {
    const int W = gray.width();
    const int H = gray.height();
    GrayImage exposures[2] = {GrayImage(W, H), GrayImage(W, H)};
    GrayImage weights[2] = {GrayImage(W, H), GrayImage(W, H)};
    for (size_t i = 0; i < gray.size(); ++i) {
        const double g = clamp01(gray.storage()[i]);
        const double s = srgb_encode(g);
        const double l = srgb_encode(std::min(gain * g, 1.0));
        const double ws = well_exposedness(s);
        const double wl = well_exposedness(l);
        const double norm = ws + wl + 1e-12;
        exposures[0].storage()[i] = s;
        exposures[1].storage()[i] = l;
        weights[0].storage()[i] = ws / norm;
        weights[1].storage()[i] = wl / norm;
    }

    const int min_dim = std::min(W, H);
    const int depth = std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(min_dim)))) - 1);

    std::vector<GrayImage> blended;
    for (int e = 0; e < 2; ++e) {
        const std::vector<GrayImage> lap = laplacian_pyramid(exposures[e], depth);
        const std::vector<GrayImage> wp = gaussian_pyramid(weights[e], depth);
        if (blended.empty()) {
            for (const GrayImage& level : lap) {
                blended.emplace_back(level.width(), level.height());
            }
        }
        for (int l = 0; l < depth; ++l) {
            auto& dst = blended[l].storage();
            for (size_t k = 0; k < dst.size(); ++k) {
                dst[k] += wp[l].storage()[k] * lap[l].storage()[k];
            }
        }
    }
    GrayImage result = blended.back();
    for (int l = depth - 2; l >= 0; --l) {
        GrayImage up = pyr_up(result, blended[l].width(), blended[l].height());
        for (size_t k = 0; k < up.size(); ++k) {
            up.storage()[k] += blended[l].storage()[k];
        }
        result = std::move(up);
    }
    for (double& v : result.storage()) {
        v = clamp01(v);
    }
    return result;
}

RgbImage tone_map(const RgbImage& img, double gain) {
    const int W = img.width();
    const int H = img.height();
    GrayImage gray(W, H);
    for (size_t i = 0; i < gray.size(); ++i) {
        gray.storage()[i] =
            (img.channels[0].storage()[i] + img.channels[1].storage()[i] + img.channels[2].storage()[i]) / 3.0;
    }
    const GrayImage fused = fuse_exposures(gray, gain);
    RgbImage out(W, H);
    for (size_t i = 0; i < gray.size(); ++i) {
        const double g = gray.storage()[i];
        const double scale = g < 1e-6 ? 1.0 : srgb_decode(fused.storage()[i]) / g;
        for (int c = 0; c < 3; ++c) {
            out.channels[c].storage()[i] = clamp01(img.channels[c].storage()[i] * scale);
        }
    }
    return out;
}

double s_curve(double x, double alpha) {
    return std::max(0.0, std::min(x - alpha * std::sin(2.0 * std::numbers::pi * x), 1.0));
}

RgbImage s_curve_contrast(const RgbImage& img, double alpha) {
    return map_channels(img, [alpha](double v) { return clamp01(s_curve(v, alpha)); });
}

RgbImage sharpen(const RgbImage& img, const FinishConfig& cfg) {
    RgbImage out(img.width(), img.height());
    for (int c = 0; c < 3; ++c) {
        const GrayImage& src = img.channels[c];
        std::vector<double> delta(src.size(), 0.0);
        for (int m = 0; m < 3; ++m) {
            if (!std::isfinite(cfg.sharpen_thresholds[m])) {
                continue;
            }
            const double sigma = cfg.sharpen_sigmas[m];
            const GrayImage blurred = gaussian_blur(src, sigma, static_cast<int>(std::ceil(3.0 * sigma)));
            for (size_t i = 0; i < src.size(); ++i) {
                const double detail = src.storage()[i] - blurred.storage()[i];
                if (std::abs(detail) > cfg.sharpen_thresholds[m]) {
                    delta[i] += cfg.sharpen_amounts[m] * detail;
                }
            }
        }
        // Untouched pixels keep their exact value: x + 0 == x.
        for (size_t i = 0; i < src.size(); ++i) {
            out.channels[c].storage()[i] = clamp01(src.storage()[i] + delta[i] / 3.0);
        }
    }
    return out;
}

uint8_t quantize8(double x) {
    const double v = std::floor(255.0 * clamp01(x) + 0.5);
    return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
}

Rgb8Image quantize8(const RgbImage& img) {
    Rgb8Image out;
    out.width = img.width();
    out.height = img.height();
    out.data.resize(static_cast<size_t>(out.width) * out.height * 3);
    for (size_t i = 0; i < img.channels[0].size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            out.data[3 * i + c] = quantize8(img.channels[c].storage()[i]);
        }
    }
    return out;
}

RgbImage finish_to_rgb(const BayerFrame& frame, const BurstMetadata& meta, const FinishConfig& cfg) {
    validate(cfg);
    const GrayImage normalized = normalize_black_white(frame, meta);
    const GrayImage balanced = white_balance(normalized, frame.cfa, meta.wb_gains);
    RgbImage rgb = color_correct(demosaic(balanced, frame.cfa), meta.color_matrix);
    if (!cfg.minimal) {
        rgb = tone_map(rgb, cfg.synthetic_gain);
        rgb = s_curve_contrast(rgb, std::min(cfg.contrast_alpha, kMaxContrastAlpha));
    }
    rgb = srgb_encode(rgb);
    if (!cfg.minimal) {
        rgb = sharpen(rgb, cfg);
    }
    return rgb;
}

Rgb8Image finish_pipeline(const BayerFrame& frame, const BurstMetadata& meta, const FinishConfig& cfg) {
    return quantize8(finish_to_rgb(frame, meta, cfg));
}

}  // namespace hdrplus

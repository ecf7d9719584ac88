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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "hdrplus/finish.hpp"
#include "test_util.hpp"

using namespace hdrplus;

namespace {

RgbImage constant_rgb(int w, int h, double r, double g, double b) {
    RgbImage img(w, h);
    for (double& v : img.channels[0].storage()) v = r;
    for (double& v : img.channels[1].storage()) v = g;
    for (double& v : img.channels[2].storage()) v = b;
    return img;
}

RgbImage random_rgb(int w, int h, uint64_t seed, double lo = 0.0, double hi = 1.0) {
    RgbImage img;
    for (int c = 0; c < 3; ++c) img.channels[c] = testutil::random_gray(w, h, seed + c, lo, hi);
    return img;
}

bool all_in_unit(const RgbImage& img) {
    for (const auto& ch : img.channels) {
        for (double v : ch.pixels()) {
            if (!(v >= 0.0 && v <= 1.0)) return false;
        }
    }
    return true;
}

double max_diff(const RgbImage& a, const RgbImage& b) {
    double m = 0;
    for (int c = 0; c < 3; ++c) m = std::max(m, testutil::max_abs_diff(a.channels[c].pixels(), b.channels[c].pixels()));
    return m;
}

// Adversarial mosaics: all zero, all one, one hot pixel, alternating extremes.
std::vector<GrayImage> adversarial_mosaics(int w, int h) {
    std::vector<GrayImage> out{GrayImage(w, h, 0.0), GrayImage(w, h, 1.0), GrayImage(w, h, 0.0), GrayImage(w, h)};
    out[2](w / 2, h / 2) = 1.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out[3](x, y) = (x / 3 + y) % 2 ? 1.0 : 0.0;
    return out;
}

}  // namespace

TEST_CASE("finish config validation") {
    FinishConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.synthetic_gain = 0.5;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = FinishConfig{};
    cfg.contrast_alpha = -0.1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = FinishConfig{};
    cfg.sharpen_sigmas[1] = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = FinishConfig{};
    cfg.sharpen_thresholds = {std::numeric_limits<double>::infinity(), 0.1, 0.1};
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("normalize_black_white") {
    BurstMetadata m;
    m.black_level = 64;
    m.white_level = 1023;
    BayerFrame f(2, 2, Cfa::RGGB);
    f.samples = {64, 1023, 0, 2000};
    const GrayImage g = normalize_black_white(f, m);
    CHECK(g(0, 0) == 0.0);
    CHECK(g(1, 0) == 1.0);
    CHECK(g(0, 1) == 0.0);
    CHECK(g(1, 1) == 1.0);
    // 543.5 counts is the midpoint; integer samples straddle it by half a count.
    BayerFrame mid(2, 2, Cfa::RGGB);
    mid.samples = {543, 544, 543, 544};
    const GrayImage gm = normalize_black_white(mid, m);
    CHECK(gm(0, 0) == doctest::Approx(0.5 - 0.5 / 959.0).epsilon(1e-14));
    CHECK(gm(1, 0) == doctest::Approx(0.5 + 0.5 / 959.0).epsilon(1e-14));
}

TEST_CASE("white balance") {
    const GrayImage mosaic = testutil::random_gray(6, 4, 1, 0.0, 0.5);
    CHECK(white_balance(mosaic, Cfa::RGGB, {1, 1, 1, 1}) == mosaic);

    GrayImage m(2, 2, 0.2);
    const GrayImage wb = white_balance(m, Cfa::RGGB, {2, 1, 1, 1});
    CHECK(wb(0, 0) == doctest::Approx(0.4));
    CHECK(wb(1, 0) == doctest::Approx(0.2));
    CHECK(white_balance(m, Cfa::BGGR, {2, 1, 1, 1})(1, 1) == doctest::Approx(0.4));

    // Channel ratios undone by reciprocal gains.
    const std::array<double, 4> ratio{0.5, 0.8, 0.8, 0.25};
    for (Cfa cfa : {Cfa::RGGB, Cfa::BGGR, Cfa::GRBG, Cfa::GBRG}) {
        GrayImage tinted(8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) tinted(x, y) = 0.3 * ratio[static_cast<int>(cfa_channel(cfa, x, y))];
        const GrayImage out = white_balance(tinted, cfa, {1 / 0.5, 1 / 0.8, 1 / 0.8, 1 / 0.25});
        for (double v : out.pixels()) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
    }
    CHECK(white_balance(GrayImage(2, 2, 0.9), Cfa::RGGB, {3, 3, 3, 3})(0, 0) == 1.0);
}

TEST_CASE("demosaic") {
    SUBCASE("constant mosaic") {
        for (Cfa cfa : {Cfa::RGGB, Cfa::BGGR, Cfa::GRBG, Cfa::GBRG}) {
            const RgbImage out = demosaic(GrayImage(10, 8, 0.37), cfa);
            for (const auto& ch : out.channels)
                for (double v : ch.pixels()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
        }
    }
    SUBCASE("horizontal ramp is reproduced away from borders") {
        GrayImage ramp(64, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 64; ++x) ramp(x, y) = 0.1 + 0.8 * x / 63.0;
        const RgbImage out = demosaic(ramp, Cfa::RGGB);
        for (int y = 4; y < 28; ++y) {
            for (int x = 4; x < 60; ++x) {
                for (const auto& ch : out.channels) {
                    CHECK(std::abs(ch(x, y) - ramp(x, y)) <= 0.01 * ramp(x, y));
                }
            }
        }
    }
    SUBCASE("impulse response stays within a 5x5 footprint") {
        for (int hx : {10, 11}) {
            const int hy = 11 - (hx - 10);  // a green site in RGGB: (10, 11) and (11, 10)
            GrayImage m(24, 24, 0.2);
            m(hx, hy) = 0.9;
            REQUIRE((cfa_channel(Cfa::RGGB, hx, hy) == CfaChannel::G1 ||
                     cfa_channel(Cfa::RGGB, hx, hy) == CfaChannel::G2));
            const RgbImage out = demosaic(m, Cfa::RGGB);
            const RgbImage base = demosaic(GrayImage(24, 24, 0.2), Cfa::RGGB);
            for (int y = 0; y < 24; ++y) {
                for (int x = 0; x < 24; ++x) {
                    const bool inside = std::abs(x - hx) <= 2 && std::abs(y - hy) <= 2;
                    if (inside) continue;
                    for (int c = 0; c < 3; ++c) CHECK(out.channels[c](x, y) == base.channels[c](x, y));
                }
            }
        }
    }
    SUBCASE("sites keep their own sample") {
        const GrayImage m = testutil::random_gray(12, 10, 5);
        const RgbImage out = demosaic(m, Cfa::GRBG);
        for (int y = 0; y < 10; ++y) {
            for (int x = 0; x < 12; ++x) {
                const CfaChannel ch = cfa_channel(Cfa::GRBG, x, y);
                const int c = ch == CfaChannel::R ? 0 : ch == CfaChannel::B ? 2 : 1;
                CHECK(out.channels[c](x, y) == m(x, y));
            }
        }
    }
}

TEST_CASE("color correction") {
    const RgbImage img = random_rgb(5, 4, 10);
    const RgbImage same = color_correct(img, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    CHECK(max_diff(same, img) == 0.0);

    const std::array<double, 9> m{1.6, -0.4, -0.2, -0.3, 1.5, -0.2, 0.1, -0.6, 1.5};
    const RgbImage gray = color_correct(constant_rgb(2, 2, 0.4, 0.4, 0.4), m);
    for (const auto& ch : gray.channels) CHECK(ch(0, 0) == doctest::Approx(0.4).epsilon(1e-12));

    const std::array<double, 9> k{0.5, 0.25, 0.125, 0.1, 0.2, 0.3, 0.3, 0.3, 0.3};
    const RgbImage basis = color_correct(constant_rgb(1, 1, 0.0, 1.0, 0.0), k);
    CHECK(basis.channels[0](0, 0) == doctest::Approx(0.25));
    CHECK(basis.channels[1](0, 0) == doctest::Approx(0.2));
    CHECK(basis.channels[2](0, 0) == doctest::Approx(0.3));
    const RgbImage mixed = color_correct(constant_rgb(1, 1, 0.2, 0.4, 0.8), k);
    CHECK(mixed.channels[0](0, 0) == doctest::Approx(0.5 * 0.2 + 0.25 * 0.4 + 0.125 * 0.8));
    CHECK(mixed.channels[1](0, 0) == doctest::Approx(0.1 * 0.2 + 0.2 * 0.4 + 0.3 * 0.8));
}

TEST_CASE("sRGB transfer") {
    CHECK(srgb_encode(0.0) == 0.0);
    CHECK(srgb_encode(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    const double knee = 0.0031308;
    const double lin = 12.92 * knee;
    const double pw = 1.055 * std::pow(knee, 1.0 / 2.4) - 0.055;
    CHECK(std::abs(lin - pw) < 1e-5);
    CHECK(srgb_encode(knee) == doctest::Approx(0.04045).epsilon(1e-3));
    CHECK(std::abs(srgb_encode(knee + 1e-9) - srgb_encode(knee)) < 1e-5);

    double prev = -1;
    for (int i = 0; i <= 10000; ++i) {
        const double x = i / 10000.0;
        const double y = srgb_encode(x);
        CHECK(y >= prev);
        prev = y;
        CHECK(std::abs(srgb_decode(y) - x) < 1e-6);
        CHECK(std::abs(srgb_encode(srgb_decode(x)) - x) < 1e-6);
    }
}

TEST_CASE("tone mapping") {
    SUBCASE("gain 1 is the identity") {
        const RgbImage img = random_rgb(40, 30, 20, 0.0, 1.0);
        CHECK(max_diff(tone_map(img, 1.0), img) < 1e-6);
    }
    SUBCASE("constant mid gray brightens into the open interval") {
        const RgbImage out = tone_map(constant_rgb(32, 32, 0.18, 0.18, 0.18), 4.0);
        const double v = out.channels[0](0, 0);
        CHECK(v > 0.18);
        CHECK(v < 0.72);
        for (const auto& ch : out.channels)
            for (double x : ch.pixels()) CHECK(x == doctest::Approx(v).epsilon(1e-9));
    }
    SUBCASE("chroma ratios are preserved") {
        const RgbImage img = random_rgb(33, 17, 30, 0.01, 0.3);
        const RgbImage out = tone_map(img, 8.0);
        for (size_t i = 0; i < img.channels[0].size(); ++i) {
            const double r = img.channels[0].pixels()[i], g = img.channels[1].pixels()[i];
            const double b = img.channels[2].pixels()[i];
            const double ro = out.channels[0].pixels()[i], go = out.channels[1].pixels()[i];
            const double bo = out.channels[2].pixels()[i];
            if (std::max({ro, go, bo}) >= 1.0) continue;  // clipped
            CHECK(std::abs(ro / go - r / g) < 1e-6 * std::max(1.0, r / g));
            CHECK(std::abs(bo / go - b / g) < 1e-6 * std::max(1.0, b / g));
        }
    }
    SUBCASE("black pixels keep scale 1") {
        const RgbImage out = tone_map(constant_rgb(8, 8, 0.0, 0.0, 0.0), 8.0);
        for (const auto& ch : out.channels)
            for (double x : ch.pixels()) CHECK(x == 0.0);
    }
    SUBCASE("fused exposures stay in range on tiny images") {
        const GrayImage g = testutil::random_gray(3, 2, 40);
        const GrayImage f = fuse_exposures(g, 8.0);
        for (double v : f.pixels()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("S-curve") {
    for (double a : {0.0, 0.08, 0.1, kMaxContrastAlpha}) {
        CHECK(s_curve(0.0, a) == 0.0);
        CHECK(s_curve(1.0, a) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(s_curve(0.5, a) == doctest::Approx(0.5).epsilon(1e-15));
    }
    CHECK(s_curve(0.25, 0.1) == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(s_curve(0.75, 0.1) == doctest::Approx(0.85).epsilon(1e-14));
    for (int i = 0; i <= 1000; ++i) CHECK(s_curve(i / 1000.0, 0.0) == i / 1000.0);
    double prev = -1;
    for (int i = 0; i <= 10000; ++i) {
        const double y = s_curve(i / 10000.0, kMaxContrastAlpha);
        CHECK(y >= prev - 1e-15);
        prev = y;
    }
    CHECK(kMaxContrastAlpha == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-15));
}

TEST_CASE("sharpening") {
    FinishConfig cfg;
    SUBCASE("constant image is unchanged") {
        const RgbImage img = constant_rgb(20, 20, 0.3, 0.5, 0.7);
        CHECK(max_diff(sharpen(img, cfg), img) == 0.0);
    }
    SUBCASE("infinite thresholds disable every mask") {
        cfg.sharpen_thresholds.fill(std::numeric_limits<double>::infinity());
        const RgbImage img = random_rgb(20, 20, 50);
        CHECK(max_diff(sharpen(img, cfg), img) == 0.0);
    }
    SUBCASE("step edge overshoots while flat regions stay bit-identical") {
        RgbImage img = constant_rgb(64, 8, 0.3, 0.3, 0.3);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 8; ++y)
                for (int x = 32; x < 64; ++x) img.channels[c](x, y) = 0.7;
        const RgbImage out = sharpen(img, cfg);
        CHECK(out.channels[0](31, 4) < 0.3);
        CHECK(out.channels[0](32, 4) > 0.7);
        // Far from the edge every detail falls below the smallest threshold.
        for (int x : {0, 1, 2, 3, 61, 62, 63}) CHECK(out.channels[0](x, 4) == img.channels[0](x, 4));
    }
    SUBCASE("pixels below every threshold are untouched") {
        const RgbImage img = random_rgb(32, 32, 60, 0.49, 0.51);  // detail never exceeds 0.02
        CHECK(max_diff(sharpen(img, cfg), img) == 0.0);
    }
}

TEST_CASE("quantize8") {
    CHECK(quantize8(0.0) == 0);
    CHECK(quantize8(1.0) == 255);
    CHECK(quantize8(0.5) == 128);
    CHECK(quantize8(-3.0) == 0);
    CHECK(quantize8(7.0) == 255);
    CHECK(quantize8(std::numeric_limits<double>::quiet_NaN()) == 0);
    CHECK(quantize8(127.5 / 255.0) == 128);
    CHECK(quantize8(127.49 / 255.0) == 127);
}

TEST_CASE("every stage maps adversarial inputs into [0, 1] without NaN") {
    FinishConfig cfg;
    BurstMetadata meta;
    meta.black_level = 0;
    meta.white_level = 65535;
    meta.wb_gains = {2.5, 1.0, 1.0, 1.8};
    meta.color_matrix = {1.8, -0.6, -0.2, -0.3, 1.6, -0.3, 0.1, -0.7, 1.6};
    for (const GrayImage& m : adversarial_mosaics(24, 18)) {
        const GrayImage wb = white_balance(m, Cfa::RGGB, meta.wb_gains);
        for (double v : wb.pixels()) CHECK((v >= 0.0 && v <= 1.0));
        const RgbImage dm = demosaic(wb, Cfa::RGGB);
        CHECK(all_in_unit(dm));
        const RgbImage cc = color_correct(dm, meta.color_matrix);
        CHECK(all_in_unit(cc));
        const RgbImage tm = tone_map(cc, cfg.synthetic_gain);
        CHECK(all_in_unit(tm));
        const RgbImage sc = s_curve_contrast(tm, cfg.contrast_alpha);
        CHECK(all_in_unit(sc));
        const RgbImage enc = srgb_encode(sc);
        CHECK(all_in_unit(enc));
        CHECK(all_in_unit(sharpen(enc, cfg)));

        BayerFrame f(24, 18, Cfa::RGGB);
        for (size_t i = 0; i < f.samples.size(); ++i)
            f.samples[i] = static_cast<uint16_t>(std::lround(m.pixels()[i] * 65535));
        CHECK(all_in_unit(finish_to_rgb(f, meta, cfg)));
    }
}

TEST_CASE("finish pipeline") {
    BurstMetadata meta;
    meta.black_level = 100;
    meta.white_level = 4095;
    SUBCASE("minimal on a constant mosaic is constant") {
        FinishConfig cfg;
        cfg.minimal = true;
        const Rgb8Image out = finish_pipeline(BayerFrame(16, 12, Cfa::RGGB, 1500), meta, cfg);
        REQUIRE(out.data.size() == 16 * 12 * 3);
        for (size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] == out.data[i % 3]);
        const uint8_t expected = quantize8(srgb_encode((1500.0 - 100) / 3995.0));
        CHECK(out.data[0] == expected);
    }
    SUBCASE("deterministic") {
        BayerFrame f = testutil::random_frame(40, 30, 70, 100, 4095);
        CHECK(finish_pipeline(f, meta, {}) == finish_pipeline(f, meta, {}));
    }
    SUBCASE("contrast alpha is clamped to keep the curve monotone") {
        BayerFrame f = testutil::random_frame(16, 16, 71, 100, 4095);
        FinishConfig big, capped;
        big.contrast_alpha = 0.5;
        capped.contrast_alpha = kMaxContrastAlpha;
        CHECK(finish_pipeline(f, meta, big) == finish_pipeline(f, meta, capped));
    }
}

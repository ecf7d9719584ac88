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

#include "hdrplus/burst_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace hdrplus {

namespace fs = std::filesystem;
using nlohmann::json;

Cfa parse_cfa(const std::string& name) {
    if (name == "RGGB") return Cfa::RGGB;
    if (name == "BGGR") return Cfa::BGGR;
    if (name == "GRBG") return Cfa::GRBG;
    if (name == "GBRG") return Cfa::GBRG;
    throw Error("unknown CFA pattern '" + name + "'");
}

std::string to_string(Cfa cfa) {
    switch (cfa) {
        case Cfa::RGGB: return "RGGB";
        case Cfa::BGGR: return "BGGR";
        case Cfa::GRBG: return "GRBG";
        case Cfa::GBRG: return "GBRG";
    }
    return "?";
}

CfaChannel cfa_channel(Cfa cfa, int dx, int dy) {
    // Greens: even row -> G1, odd row -> G2.
    static constexpr CfaChannel R = CfaChannel::R, G1 = CfaChannel::G1, G2 = CfaChannel::G2,
                                B = CfaChannel::B;
    static constexpr CfaChannel table[4][2][2] = {
        {{R, G1}, {G2, B}},  // RGGB
        {{B, G1}, {G2, R}},  // BGGR
        {{G1, R}, {B, G2}},  // GRBG
        {{G1, B}, {R, G2}},  // GBRG
    };
    return table[static_cast<int>(cfa)][dy & 1][dx & 1];
}

void validate_frame(const BayerFrame& frame) {
    if (frame.width <= 0 || frame.height <= 0) {
        throw Error("frame has empty dimensions");
    }
    if (frame.width % 2 != 0 || frame.height % 2 != 0) {
        throw Error("frame dimensions " + std::to_string(frame.width) + "x" +
                    std::to_string(frame.height) + " are not even (incomplete CFA cells)");
    }
    if (frame.samples.size() != static_cast<size_t>(frame.width) * frame.height) {
        throw Error("frame sample count does not match its dimensions");
    }
}

void validate_noise_params(const NoiseParams& np) {
    if (!(np.lambda_s >= 0.0) || !(np.lambda_r >= 0.0) || !std::isfinite(np.lambda_s) ||
        !std::isfinite(np.lambda_r)) {
        throw Error("noise parameters must be finite and non-negative");
    }
    if (np.lambda_s == 0.0 && np.lambda_r == 0.0) {
        throw Error("noise parameters lambda_s and lambda_r are both zero");
    }
}

void validate_metadata(const BurstMetadata& meta, size_t burst_length) {
    if (!(meta.black_level >= 0 && meta.black_level < meta.white_level && meta.white_level <= 65535)) {
        throw Error("levels must satisfy 0 <= black_level < white_level <= 65535");
    }
    for (double g : meta.wb_gains) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw Error("white balance gains must be positive");
        }
    }
    for (double m : meta.color_matrix) {
        if (!std::isfinite(m)) {
            throw Error("color matrix entries must be finite");
        }
    }
    if (meta.noise_profile) {
        validate_noise_params(*meta.noise_profile);
    } else if (!(meta.iso >= 100.0)) {
        throw Error("iso must be >= 100 when no noise_profile is given");
    }
    if (meta.ref_index < 0 || static_cast<size_t>(meta.ref_index) >= burst_length) {
        throw Error("ref_index " + std::to_string(meta.ref_index) + " outside burst of length " +
                    std::to_string(burst_length));
    }
}

NoiseParams derive_noise_params(const BurstMetadata& meta, const NoiseParams& baseline) {
    if (meta.noise_profile) {
        return *meta.noise_profile;
    }
    const double alpha = meta.iso / 100.0;
    return {alpha * baseline.lambda_s, alpha * alpha * baseline.lambda_r};
}

// ---------------------------------------------------------------------------
// Metadata

namespace {

template <typename T>
T get_number(const json& j, const char* key, const fs::path& file) {
    if (!j.contains(key)) {
        throw Error(file.string() + ": missing field '" + key + "'");
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
        throw Error(file.string() + ": field '" + key + "' must be a number");
    }
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) {
            throw Error(file.string() + ": field '" + key + "' must be an integer");
        }
    }
    return v.get<T>();
}

template <size_t N>
std::array<double, N> get_array(const json& j, const char* key, const fs::path& file) {
    if (!j.contains(key)) {
        throw Error(file.string() + ": missing field '" + key + "'");
    }
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != N) {
        throw Error(file.string() + ": field '" + key + "' must be an array of " + std::to_string(N) +
                    " numbers");
    }
    std::array<double, N> out{};
    for (size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) {
            throw Error(file.string() + ": field '" + key + "' must contain only numbers");
        }
        out[i] = v[i].get<double>();
    }
    return out;
}

}  // namespace

BurstMetadata load_metadata(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw Error("missing metadata file " + file.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(file.string() + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw Error(file.string() + ": metadata must be a JSON object");
    }
    BurstMetadata meta;
    if (!j.contains("cfa") || !j.at("cfa").is_string()) {
        throw Error(file.string() + ": field 'cfa' must be a string");
    }
    try {
        meta.cfa = parse_cfa(j.at("cfa").get<std::string>());
    } catch (const Error& e) {
        throw Error(file.string() + ": " + e.what());
    }
    meta.black_level = get_number<int>(j, "black_level", file);
    meta.white_level = get_number<int>(j, "white_level", file);
    meta.iso = get_number<double>(j, "iso", file);
    meta.wb_gains = get_array<4>(j, "wb_gains", file);
    meta.color_matrix = get_array<9>(j, "color_matrix", file);
    if (j.contains("noise_profile") && !j.at("noise_profile").is_null()) {
        const json& p = j.at("noise_profile");
        if (!p.is_object()) {
            throw Error(file.string() + ": field 'noise_profile' must be an object");
        }
        meta.noise_profile = NoiseParams{get_number<double>(p, "lambda_s", file),
                                         get_number<double>(p, "lambda_r", file)};
    }
    if (j.contains("ref_index")) {
        meta.ref_index = get_number<int>(j, "ref_index", file);
    }
    return meta;
}

void write_metadata(const BurstMetadata& meta, const fs::path& file) {
    json j;
    j["cfa"] = to_string(meta.cfa);
    j["black_level"] = meta.black_level;
    j["white_level"] = meta.white_level;
    j["iso"] = meta.iso;
    j["wb_gains"] = meta.wb_gains;
    j["color_matrix"] = meta.color_matrix;
    if (meta.noise_profile) {
        j["noise_profile"] = {{"lambda_s", meta.noise_profile->lambda_s},
                              {"lambda_r", meta.noise_profile->lambda_r}};
    }
    j["ref_index"] = meta.ref_index;
    std::ofstream out(file);
    if (!out) {
        throw Error("cannot open " + file.string() + " for writing");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw Error("failed writing " + file.string());
    }
}

// ---------------------------------------------------------------------------
// PGM

namespace {

void skip_pgm_whitespace(std::istream& in) {
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_pgm_int(std::istream& in, const fs::path& path) {
    skip_pgm_whitespace(in);
    int v = -1;
    in >> v;
    if (!in || v < 0) {
        throw Error(path.string() + ": malformed PGM header");
    }
    return v;
}

void write_pgm16(int width, int height, const uint16_t* samples, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << "P5\n" << width << ' ' << height << "\n65535\n";
    std::vector<unsigned char> buf(static_cast<size_t>(width) * 2);
    for (int y = 0; y < height; ++y) {
        const uint16_t* row = samples + static_cast<size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            buf[2 * x] = static_cast<unsigned char>(row[x] >> 8);
            buf[2 * x + 1] = static_cast<unsigned char>(row[x] & 0xff);
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    }
    out.flush();
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

}  // namespace

BayerFrame read_raw16(const fs::path& path, Cfa cfa) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') {
        throw Error(path.string() + ": not a binary PGM (P5) file");
    }
    const int width = read_pgm_int(in, path);
    const int height = read_pgm_int(in, path);
    const int maxval = read_pgm_int(in, path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
        throw Error(path.string() + ": unsupported PGM geometry or maxval");
    }
    in.get();  // single whitespace before raster
    BayerFrame frame(width, height, cfa);
    const size_t count = frame.samples.size();
    if (maxval < 256) {
        std::vector<unsigned char> buf(count);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count));
        if (!in) {
            throw Error(path.string() + ": truncated PGM raster");
        }
        std::copy(buf.begin(), buf.end(), frame.samples.begin());
    } else {
        std::vector<unsigned char> buf(count * 2);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!in) {
            throw Error(path.string() + ": truncated PGM raster");
        }
        for (size_t i = 0; i < count; ++i) {
            frame.samples[i] = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
        }
    }
    return frame;
}

void write_raw16(const BayerFrame& frame, const fs::path& path) {
    validate_frame(frame);
    write_pgm16(frame.width, frame.height, frame.samples.data(), path);
}

void write_gray16(const Image<uint16_t>& img, const fs::path& path) {
    write_pgm16(img.width(), img.height(), img.storage().data(), path);
}

// ---------------------------------------------------------------------------
// Burst directory

RawBurst load_burst(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw Error("burst directory " + dir.string() + " does not exist");
    }
    const fs::path meta_path = dir / "burst.json";
    if (!fs::exists(meta_path)) {
        throw Error("missing metadata file " + meta_path.string());
    }

    static const std::regex frame_re(R"(frame_(\d+)\.pgm)");
    std::map<long, fs::path> indexed;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (entry.is_regular_file() && std::regex_match(name, m, frame_re)) {
            const long k = std::stol(m[1].str());
            if (!indexed.emplace(k, entry.path()).second) {
                throw Error("duplicate frame index " + std::to_string(k) + " in " + dir.string());
            }
        }
    }
    if (indexed.size() < 2) {
        throw Error("burst too short: " + dir.string() + " holds " + std::to_string(indexed.size()) +
                    " frame(s), at least 2 are required");
    }

    RawBurst burst;
    burst.meta = load_metadata(meta_path);
    try {
        validate_metadata(burst.meta, indexed.size());
    } catch (const Error& e) {
        throw Error(meta_path.string() + ": " + e.what());
    }

    fs::path first_path;
    for (const auto& [k, path] : indexed) {
        BayerFrame f = read_raw16(path, burst.meta.cfa);
        try {
            validate_frame(f);
        } catch (const Error& e) {
            throw Error(path.string() + ": " + e.what());
        }
        if (!burst.frames.empty()) {
            const BayerFrame& f0 = burst.frames.front();
            if (f.width != f0.width || f.height != f0.height) {
                throw Error("frame size mismatch: " + first_path.string() + " is " +
                            std::to_string(f0.width) + "x" + std::to_string(f0.height) + " but " +
                            path.string() + " is " + std::to_string(f.width) + "x" +
                            std::to_string(f.height));
            }
        } else {
            first_path = path;
        }
        burst.frames.push_back(std::move(f));
    }
    return burst;
}

void write_burst(const RawBurst& burst, const fs::path& dir) {
    fs::create_directories(dir);
    for (size_t k = 0; k < burst.frames.size(); ++k) {
        write_raw16(burst.frames[k], dir / ("frame_" + std::to_string(k) + ".pgm"));
    }
    write_metadata(burst.meta, dir / "burst.json");
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_rgb8(const Rgb8Image& image, const fs::path& path) {
    if (image.data.size() != static_cast<size_t>(image.width) * image.height * 3 || image.width <= 0 ||
        image.height <= 0) {
        throw Error("write_rgb8: inconsistent image buffer");
    }
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, image.data.data() + static_cast<size_t>(y) * image.width * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(fp.get()) != 0) {
        throw Error("failed writing " + path.string());
    }
}

Rgb8Image read_rgb8(const fs::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw Error("cannot open " + path.string());
    }
    Rgb8Image img;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(path.string() + ": malformed PNG");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.data.resize(static_cast<size_t>(img.width) * img.height * 3);
    for (int y = 0; y < img.height; ++y) {
        png_read_row(png, img.data.data() + static_cast<size_t>(y) * img.width * 3, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace hdrplus

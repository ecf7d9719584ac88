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

#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdrplus {

/// Error raised for invalid inputs, malformed files and I/O failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major 2D grid.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {
        if (width < 0 || height < 0) {
            throw Error("negative image dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return data_[static_cast<size_t>(y) * width_ + x];
    }
    const T& operator()(int x, int y) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_);
        return data_[static_cast<size_t>(y) * width_ + x];
    }

    T* row(int y) { return data_.data() + static_cast<size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<size_t>(y) * width_; }

    std::span<T> pixels() { return data_; }
    std::span<const T> pixels() const { return data_; }

    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GrayImage = Image<double>;

/// Maps any integer coordinate into [0, n) by mirroring about the edge samples
/// (edge samples are not repeated). Preserves index parity, so CFA phase is kept.
inline int reflect_index(int i, int n) {
    if (n == 1) {
        return 0;
    }
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) {
        i += period;
    }
    return i < n ? i : period - i;
}

/// Copies a w×h window with top-left (x0, y0) out of `src`, reflecting coordinates
/// that fall outside the image.
template <typename T>
void extract_reflected(const Image<T>& src, int x0, int y0, int w, int h, T* out) {
    const int W = src.width();
    const int H = src.height();
    const bool inside_x = x0 >= 0 && x0 + w <= W;
    for (int j = 0; j < h; ++j) {
        const T* srow = src.row(reflect_index(y0 + j, H));
        T* orow = out + static_cast<size_t>(j) * w;
        if (inside_x) {
            for (int i = 0; i < w; ++i) {
                orow[i] = srow[x0 + i];
            }
        } else {
            for (int i = 0; i < w; ++i) {
                orow[i] = srow[reflect_index(x0 + i, W)];
            }
        }
    }
}

/// 8-bit interleaved RGB raster.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;  // size = width * height * 3

    bool operator==(const Rgb8Image&) const = default;
};

}  // namespace hdrplus

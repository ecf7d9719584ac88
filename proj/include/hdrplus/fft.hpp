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

#include <complex>
#include <cstddef>
#include <span>

namespace hdrplus {

using Complex = std::complex<double>;

/// SIMD-aligned complex scratch buffer owned through FFTW's allocator.
class FftBuffer {
public:
    FftBuffer() = default;
    explicit FftBuffer(size_t count);
    ~FftBuffer();
    FftBuffer(FftBuffer&& other) noexcept;
    FftBuffer& operator=(FftBuffer&& other) noexcept;
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;

    Complex* data() { return data_; }
    const Complex* data() const { return data_; }
    size_t size() const { return size_; }
    Complex& operator[](size_t i) { return data_[i]; }
    const Complex& operator[](size_t i) const { return data_[i]; }
    std::span<Complex> span() { return {data_, size_}; }
    std::span<const Complex> span() const { return {data_, size_}; }

private:
    Complex* data_ = nullptr;
    size_t size_ = 0;
};

/// 2D complex DFT of a fixed rows×cols shape. Forward is unnormalized;
/// inverse applies 1/(rows*cols). Plans are created once per shape and shared;
/// execute() is safe to call concurrently with FftBuffer-allocated arrays.
class Fft2d {
public:
    Fft2d(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    void forward(const Complex* in, Complex* out) const;
    void inverse(const Complex* in, Complex* out) const;

private:
    int rows_;
    int cols_;
    void* forward_plan_;
    void* inverse_plan_;
};

}  // namespace hdrplus

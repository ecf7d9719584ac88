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

#include "hdrplus/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <new>
#include <utility>

namespace hdrplus {

FftBuffer::FftBuffer(size_t count) : size_(count) {
    data_ = reinterpret_cast<Complex*>(fftw_alloc_complex(count));
    if (data_ == nullptr) {
        throw std::bad_alloc();
    }
    for (size_t i = 0; i < count; ++i) {
        data_[i] = Complex{};
    }
}

FftBuffer::~FftBuffer() {
    if (data_ != nullptr) {
        fftw_free(data_);
    }
}

FftBuffer::FftBuffer(FftBuffer&& other) noexcept
    : data_(std::exchange(other.data_, nullptr)), size_(std::exchange(other.size_, 0)) {}

FftBuffer& FftBuffer::operator=(FftBuffer&& other) noexcept {
    if (this != &other) {
        if (data_ != nullptr) fftw_free(data_);
        data_ = std::exchange(other.data_, nullptr);
        size_ = std::exchange(other.size_, 0);
    }
    return *this;
}

namespace {

struct PlanPair {
    fftw_plan forward;
    fftw_plan inverse;
};

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

PlanPair get_plans(int rows, int cols) {
    static std::map<std::pair<int, int>, PlanPair> cache;
    std::lock_guard lock(planner_mutex());
    auto it = cache.find({rows, cols});
    if (it != cache.end()) {
        return it->second;
    }
    FftBuffer a(static_cast<size_t>(rows) * cols);
    FftBuffer b(static_cast<size_t>(rows) * cols);
    auto* pa = reinterpret_cast<fftw_complex*>(a.data());
    auto* pb = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_PRESERVE_INPUT;
    PlanPair plans{fftw_plan_dft_2d(rows, cols, pa, pb, FFTW_FORWARD, flags),
                   fftw_plan_dft_2d(rows, cols, pa, pb, FFTW_BACKWARD, flags)};
    if (plans.forward == nullptr || plans.inverse == nullptr) {
        throw std::runtime_error("FFTW planning failed");
    }
    cache.emplace(std::make_pair(rows, cols), plans);
    return plans;
}

}  // namespace

Fft2d::Fft2d(int rows, int cols) : rows_(rows), cols_(cols) {
    const PlanPair plans = get_plans(rows, cols);
    forward_plan_ = plans.forward;
    inverse_plan_ = plans.inverse;
}

void Fft2d::forward(const Complex* in, Complex* out) const {
    fftw_execute_dft(static_cast<fftw_plan>(forward_plan_),
                     reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
}

void Fft2d::inverse(const Complex* in, Complex* out) const {
    fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_),
                     reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
    const double scale = 1.0 / (static_cast<double>(rows_) * cols_);
    const int count = rows_ * cols_;
    for (int i = 0; i < count; ++i) {
        out[i] *= scale;
    }
}

}  // namespace hdrplus

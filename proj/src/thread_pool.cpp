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

#include "hdrplus/thread_pool.hpp"

#include <algorithm>
#include <utility>

namespace hdrplus {

ThreadPool::ThreadPool(unsigned threads) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    // The calling thread participates, so spawn one fewer worker.
    for (unsigned i = 1; i < threads; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& t : workers_) {
        t.join();
    }
}

void ThreadPool::parallel_for(int begin, int end, const std::function<void(int)>& body) {
    if (begin >= end) {
        return;
    }
    std::unique_lock lock(mutex_);
    job_ = &body;
    next_ = begin;
    end_ = end;
    chunk_ = std::max(1, (end - begin) / static_cast<int>(size() * 4));
    error_ = nullptr;
    active_ = static_cast<int>(size());
    ++generation_;
    wake_.notify_all();

    // Caller drains chunks alongside the workers.
    while (true) {
        if (next_ >= end_) {
            break;
        }
        const int lo = next_;
        const int hi = std::min(end_, lo + chunk_);
        next_ = hi;
        lock.unlock();
        try {
            for (int i = lo; i < hi; ++i) {
                body(i);
            }
        } catch (...) {
            lock.lock();
            if (!error_) error_ = std::current_exception();
            next_ = end_;
            continue;
        }
        lock.lock();
    }
    --active_;
    done_.wait(lock, [this] { return active_ == 0; });
    job_ = nullptr;
    if (error_) {
        std::rethrow_exception(std::exchange(error_, nullptr));
    }
}

void ThreadPool::worker_loop() {
    size_t seen = 0;
    std::unique_lock lock(mutex_);
    while (true) {
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) {
            return;
        }
        seen = generation_;
        const auto* job = job_;
        while (next_ < end_) {
            const int lo = next_;
            const int hi = std::min(end_, lo + chunk_);
            next_ = hi;
            lock.unlock();
            try {
                for (int i = lo; i < hi; ++i) {
                    (*job)(i);
                }
            } catch (...) {
                lock.lock();
                if (!error_) error_ = std::current_exception();
                next_ = end_;
                continue;
            }
            lock.lock();
        }
        if (--active_ == 0) {
            done_.notify_all();
        }
    }
}

}  // namespace hdrplus

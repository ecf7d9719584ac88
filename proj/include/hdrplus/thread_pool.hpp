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

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hdrplus {

/// Fixed-size worker pool. parallel_for splits [begin, end) into contiguous
/// chunks; callers must make each index independent so results do not depend
/// on the schedule.
class ThreadPool {
public:
    /// threads == 0 uses std::thread::hardware_concurrency().
    explicit ThreadPool(unsigned threads = 0);
    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    unsigned size() const { return static_cast<unsigned>(workers_.size()) + 1; }

    void parallel_for(int begin, int end, const std::function<void(int)>& body);

private:
    void worker_loop();

    std::vector<std::thread> workers_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::condition_variable done_;
    const std::function<void(int)>* job_ = nullptr;
    int next_ = 0;
    int end_ = 0;
    int chunk_ = 1;
    int active_ = 0;
    size_t generation_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
};

/// Runs body over [begin, end) on `pool`, or inline when pool is null.
inline void parallel_for(ThreadPool* pool, int begin, int end, const std::function<void(int)>& body) {
    if (pool == nullptr || pool->size() <= 1 || end - begin <= 1) {
        for (int i = begin; i < end; ++i) {
            body(i);
        }
        return;
    }
    pool->parallel_for(begin, end, body);
}

}  // namespace hdrplus

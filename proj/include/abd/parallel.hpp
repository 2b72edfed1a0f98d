#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace abd {

/// Runs fn(i) for i in [0, n). Work items must be independent; results must be
/// written to disjoint slots so output does not depend on the worker count.
inline void parallel_for(int64_t n, int workers, const std::function<void(int64_t)>& fn) {
    if (n <= 0) return;
    if (workers < 1) workers = 1;
    if (workers == 1 || n == 1) {
        for (int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex err_mutex;
    const int64_t chunk = std::max<int64_t>(1, n / (static_cast<int64_t>(workers) * 8));
    auto worker = [&]() {
        for (;;) {
            const int64_t begin = next.fetch_add(chunk);
            if (begin >= n || failed.load()) return;
            const int64_t end = std::min(begin + chunk, n);
            for (int64_t i = begin; i < end; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
}

}  // namespace abd

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace randlat {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Runs fn(i) for i in [0, n). Each index owns its output slot, so results are
// identical for every thread count; only wall-clock changes.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t chunk = std::max<std::size_t>(1, n / (threads * 8));
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::exception_ptr err;
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t begin = next.fetch_add(chunk);
                if (begin >= n || failed.load()) return;
                std::size_t end = std::min(n, begin + chunk);
                try {
                    for (std::size_t i = begin; i < end; ++i) fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mutex);
                    if (!failed.exchange(true)) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed.load()) std::rethrow_exception(err);
}

}  // namespace randlat

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dislab {

// Runs fn(i) for i in [0, n) on up to n_threads workers. Work items are
// independent and write only to their own index, so results never depend on
// scheduling; the first exception is rethrown after all workers join.
inline void parallel_for(std::size_t n, std::size_t n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (n_threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    n_threads = std::min(n_threads, n);
    std::vector<std::thread> workers;
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::atomic<std::size_t> next{0};
    workers.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dislab

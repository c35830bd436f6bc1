#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace synthline {

/// Calls fn(i) for i in [0, count) on up to `parallelism` threads. With
/// parallelism <= 1 the calls run inline, in order. The first exception
/// thrown by any call is rethrown after all workers have stopped; remaining
/// indices are skipped once a failure is seen.
template <typename Fn>
void parallel_for(std::size_t count, int parallelism, Fn&& fn) {
    if (parallelism <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(parallelism), count);
        for (std::size_t w = 0; w < n; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < count && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace synthline

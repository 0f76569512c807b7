#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace wildvision {

/// Worker count: hardware concurrency, capped by WILDVISION_THREADS when set.
inline unsigned worker_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("WILDVISION_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
        } catch (const std::exception&) {
        }
    }
    return n;
}

/// Runs fn(i) for i in [0, n). Results must be written to slot i by the caller so
/// output order never depends on scheduling. The first exception (lowest index)
/// is rethrown after all workers join.
namespace detail {
inline thread_local bool in_parallel_region = false;
}

/// Nested calls run serially on the calling worker.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = detail::in_parallel_region ? 1 : std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_index = n;
    std::exception_ptr failure;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                detail::in_parallel_region = true;
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (i < failed_index) {
                            failed_index = i;
                            failure = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace wildvision

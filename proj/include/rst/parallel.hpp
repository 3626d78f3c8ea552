#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rst {

inline unsigned resolve_threads(unsigned requested, std::size_t n_tasks) {
    unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, n_tasks)));
}

/// Runs task(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Tasks are assigned round-robin so the split does not depend on
/// timing; results must be written by index. The first exception is rethrown.
template <class Task>
void parallel_for(std::size_t n, unsigned threads, Task&& task) {
    const unsigned workers = resolve_threads(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace rst

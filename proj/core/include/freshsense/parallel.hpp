#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace freshsense {

// Static block partition of [0, n) across jobs threads (0 = hardware
// concurrency). fn(i) must only touch its own slot of any shared output so
// results do not depend on the schedule. The first exception thrown by any
// worker is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    if (jobs == 0) {
        jobs = std::thread::hardware_concurrency();
        if (jobs == 0) {
            jobs = 1;
        }
    }
    if (jobs == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    if (jobs > n) {
        jobs = static_cast<unsigned>(n);
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    const std::size_t chunk = (n + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
        const std::size_t begin = static_cast<std::size_t>(j) * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        workers.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    fn(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace freshsense

#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace levtof {

inline unsigned resolve_thread_count(unsigned requested, std::uint64_t work_items) {
    unsigned threads = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, work_items)));
}

/// Calls fn(begin, end) on disjoint chunks of [0, n) from up to `threads`
/// workers (0 = hardware concurrency). Rethrows the first worker exception.
template <class Fn>
void parallel_chunks(std::uint64_t n, unsigned threads, Fn&& fn) {
    const unsigned workers = resolve_thread_count(threads, n);
    if (workers <= 1) {
        fn(std::uint64_t{0}, n);
        return;
    }
    const std::uint64_t chunk = (n + workers - 1) / workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint64_t begin = std::min<std::uint64_t>(n, w * chunk);
            const std::uint64_t end = std::min<std::uint64_t>(n, begin + chunk);
            if (begin == end) break;
            pool.emplace_back([&, begin, end] {
                try {
                    fn(begin, end);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace levtof

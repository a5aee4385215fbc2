#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace logsem {

// Split [0, n) into contiguous chunks and run fn(begin, end) on up to
// max_threads workers.  Chunk boundaries depend only on (n, max_threads),
// never on scheduling, so any result assembled per index is deterministic.
inline void parallel_for(size_t n, int max_threads,
                         const std::function<void(size_t, size_t)>& fn) {
    if (n == 0) return;
    size_t workers = std::max(1, max_threads);
    workers = std::min(workers, n);
    if (workers == 1) {
        fn(0, n);
        return;
    }
    size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(workers);
    for (size_t w = 0; w < workers; ++w) {
        size_t b = w * chunk;
        size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, w, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& err : errs)
        if (err) std::rethrow_exception(err);
}

}  // namespace logsem

#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace mforge {

/// Number of workers actually used for n items.
inline std::size_t parallel_workers(std::size_t n, int threads) {
    if (threads <= 1 || n < 2) return 1;
    return std::min<std::size_t>(static_cast<std::size_t>(threads), n);
}

/// Static contiguous partition of [0, n) into worker chunks. The body
/// receives (lo, hi, worker); per-worker accumulators reduced in worker
/// order give results that do not depend on scheduling.
inline void parallel_chunks(std::size_t n, int threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    std::size_t workers = parallel_workers(n, threads);
    if (workers == 1) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t lo = n * w / workers;
        std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([lo, hi, w, &body] { body(lo, hi, w); });
    }
    for (auto& t : pool) t.join();
}

/// Static-partition parallel loop over [0, n). With threads <= 1 the body
/// runs inline. Chunk boundaries depend only on (n, threads), so per-index
/// work that derives its own rng streams is deterministic under any thread
/// count.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    parallel_chunks(n, threads, [&body](std::size_t lo, std::size_t hi, std::size_t) {
        for (std::size_t i = lo; i < hi; ++i) body(i);
    });
}

}  // namespace mforge

#pragma once

#include <cstdlib>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

namespace mlab {

// Worker count: MLAB_THREADS if set, else 1. Single-threaded by default so
// results are reproducible run to run without any environment setup.
inline int worker_count() {
    if (const char* env = std::getenv("MLAB_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// Splits [0, count) into fixed contiguous chunks, one per worker, and runs
// body(begin, end) on each. Chunk boundaries depend only on count and the
// worker count, never on scheduling, so per-chunk partial results can be
// combined in index order deterministically.
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    const int workers = worker_count();
    if (workers <= 1 || count < 2) {
        body(0, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
        const std::size_t begin = static_cast<std::size_t>(t) * chunk;
        if (begin >= count) break;
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

// Deterministic parallel sum: each fixed chunk accumulates privately and the
// partials are added in chunk order.
inline double parallel_sum(std::size_t count,
                           const std::function<double(std::size_t, std::size_t)>& chunk_sum) {
    const int workers = worker_count();
    if (workers <= 1 || count < 2) return chunk_sum(0, count);
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<double> partial;
    std::vector<std::thread> pool;
    std::size_t begin = 0;
    while (begin < count) {
        const std::size_t end = std::min(count, begin + chunk);
        partial.push_back(0.0);
        begin = end;
    }
    begin = 0;
    for (std::size_t ci = 0; ci < partial.size(); ++ci) {
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&chunk_sum, &partial, ci, begin, end] {
            partial[ci] = chunk_sum(begin, end);
        });
        begin = end;
    }
    for (auto& th : pool) th.join();
    double total = 0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace mlab

#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace fpklab {

/// Data-parallel width: FPKLAB_THREADS caps the number of worker threads,
/// default is single-threaded. Results are bitwise independent of the width
/// because every index is computed entirely by one worker.
inline int max_threads() {
    static const int n = [] {
        const char* env = std::getenv("FPKLAB_THREADS");
        if (!env) return 1;
        int v = std::atoi(env);
        if (v < 1) return 1;
        return std::min(v, 256);
    }();
    return n;
}

/// Run fn(i) for i in [begin, end) split into contiguous chunks.
inline void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int n = end - begin;
    const int workers = std::min(max_threads(), std::max(1, n));
    if (workers == 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fpklab

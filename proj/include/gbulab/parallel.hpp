#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace gbulab {

/// Worker count for row-parallel stencils: GBULAB_THREADS if set, else the
/// hardware concurrency.
inline int thread_count() {
    static const int n = [] {
        if (const char* env = std::getenv("GBULAB_THREADS")) {
            try {
                const int v = std::stoi(env);
                if (v >= 1) return v;
            } catch (...) {
            }
        }
        return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    }();
    return n;
}

/// Calls fn(row) for every row in [begin, end). Rows are split in contiguous
/// blocks; fn must only write to data owned by its row.
template <class Fn>
void for_rows(int begin, int end, Fn&& fn, int min_rows_per_thread = 32) {
    const int rows = end - begin;
    const int workers = std::min(thread_count(), std::max(1, rows / min_rows_per_thread));
    if (workers <= 1) {
        for (int j = begin; j < end; ++j) fn(j);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    const int chunk = (rows + workers - 1) / workers;
    for (int w = 1; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int j = lo; j < hi; ++j) fn(j);
        });
    }
    for (int j = begin; j < std::min(end, begin + chunk); ++j) fn(j);
}

} // namespace gbulab

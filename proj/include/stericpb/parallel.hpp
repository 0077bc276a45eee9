#pragma once

#include <thread>
#include <vector>

namespace stericpb {

/// Worker count used by grid sweeps. Set once at startup; 1 = serial.
inline int& worker_count() {
    static int n = 1;
    return n;
}

/// Runs body(i) for i in [0, n). Chunk boundaries depend only on n and the
/// worker count, so element-wise writes are reproducible for a fixed count.
template <class F>
inline void parallel_for(long long n, F&& body) {
    const int workers = worker_count();
    if (workers <= 1 || n < 8192) {
        for (long long i = 0; i < n; ++i) body(i);
        return;
    }
    const long long chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const long long lo = w * chunk;
        const long long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (long long i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// Chunked sum; partials are combined in chunk order, so the result is
/// deterministic for a fixed worker count.
template <class F>
inline double parallel_sum(long long n, F&& term) {
    const int workers = worker_count();
    if (workers <= 1 || n < 8192) {
        double s = 0.0;
        for (long long i = 0; i < n; ++i) s += term(i);
        return s;
    }
    const long long chunk = (n + workers - 1) / workers;
    std::vector<double> partial(static_cast<size_t>(workers), 0.0);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const long long lo = w * chunk;
        const long long hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, w, &partial, &term] {
            double s = 0.0;
            for (long long i = lo; i < hi; ++i) s += term(i);
            partial[static_cast<size_t>(w)] = s;
        });
    }
    for (auto& t : pool) t.join();
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

}  // namespace stericpb

#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ringbp {

/// Worker count: explicit request, else RINGBP_THREADS, else hardware.
inline int worker_count(int requested = 0) {
    if (requested >= 1) return requested;
    if (const char* env = std::getenv("RINGBP_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

/// Runs f(i) for i in [0, n) on a small worker pool. Each index is
/// processed exactly once; callers keep results in per-index slots so the
/// outcome does not depend on scheduling.
template <typename F>
inline void parallel_for(std::int64_t n, const F& f, int threads = 0) {
    const int workers = static_cast<int>(std::min<std::int64_t>(worker_count(threads), n));
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto body = [&]() {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n) return;
            f(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
}

}  // namespace ringbp

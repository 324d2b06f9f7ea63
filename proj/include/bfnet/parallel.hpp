#pragma once

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace bfnet {

/// Worker count: BFNET_THREADS when set, hardware concurrency otherwise.
/// Thread count must never change results; see parallel_for below.
inline unsigned thread_width() {
    if (const char* env = std::getenv("BFNET_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1 && n <= 256) return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(begin, end) over fixed-size chunks of [0, n). Chunk boundaries
/// depend only on n, so any write pattern keyed by index is bitwise
/// reproducible for every thread count. Reductions must accumulate into
/// per-chunk slots and combine in chunk order afterwards.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                         std::size_t chunk = 4096) {
    if (n == 0) return;
    const unsigned width = thread_width();
    const std::size_t chunks = (n + chunk - 1) / chunk;
    if (width <= 1 || chunks <= 1) {
        // Same chunk boundaries as the pooled path, so per-chunk accumulation
        // (and its floating-point order) is identical at any width.
        for (std::size_t c = 0; c < chunks; ++c)
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            const std::size_t lo = c * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            fn(lo, hi);
        }
    };
    std::vector<std::thread> pool;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(width, chunks));
    pool.reserve(workers - 1);
    for (unsigned i = 1; i < workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

/// Deterministic parallel reduction: per-chunk partials combined in chunk order.
template <typename T, typename Map, typename Combine>
T parallel_reduce(std::size_t n, T init, Map&& map_chunk, Combine&& combine,
                  std::size_t chunk = 4096) {
    if (n == 0) return init;
    const std::size_t chunks = (n + chunk - 1) / chunk;
    std::vector<T> partial(chunks, init);
    parallel_for(
        n,
        [&](std::size_t lo, std::size_t hi) {
            const std::size_t c = lo / chunk;
            partial[c] = map_chunk(lo, hi);
        },
        chunk);
    T acc = init;
    for (const T& part : partial) acc = combine(acc, part);
    return acc;
}

} // namespace bfnet

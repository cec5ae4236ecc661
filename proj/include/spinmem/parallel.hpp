#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace spinmem {

/// Runs fn(chunk_index) for chunk_index in [0, n_chunks) across up to
/// n_threads worker threads.  The chunk decomposition is fixed by the caller,
/// so any reduction done per chunk and then combined in chunk order is
/// independent of the thread count.  Threads only race for chunk indices,
/// never for data.
inline void run_chunks(std::size_t n_chunks, int n_threads, const auto& fn) {
    if (n_chunks == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(n_threads < 1 ? 1 : static_cast<std::size_t>(n_threads), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks) return;
            fn(c);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

/// Splits [0, n) into n_chunks contiguous ranges of near-equal size and runs
/// fn(begin, end, chunk_index) for each.  The split depends only on n and
/// n_chunks, so per-chunk partial results combined in chunk order give
/// bitwise identical totals for any thread count.
inline void run_ranges(std::size_t n, std::size_t n_chunks, int n_threads, const auto& fn) {
    if (n == 0) return;
    n_chunks = std::min(std::max<std::size_t>(n_chunks, 1), n);
    run_chunks(n_chunks, n_threads, [&](std::size_t c) {
        const std::size_t begin = n * c / n_chunks;
        const std::size_t end = n * (c + 1) / n_chunks;
        fn(begin, end, c);
    });
}

/// Fixed chunk count used for Monte Carlo loops.  Part of the reproducibility
/// contract: stream indices and reduction order derive from it, so changing
/// it changes results for a given seed.
inline constexpr std::size_t kMonteCarloChunks = 256;

}  // namespace spinmem

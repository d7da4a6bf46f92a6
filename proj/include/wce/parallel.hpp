#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace wce {

// Worker count used by chunked_reduce. 0 means "decide from WCE_THREADS or hardware".
void set_thread_count(int n);
int thread_count();

// Deterministic map-reduce: `total` items are cut into fixed chunks of size
// `chunk_size` (the cut does NOT depend on the worker count), each chunk is
// mapped by `per_chunk(begin, end, chunk_index)` and the per-chunk results are
// folded sequentially in chunk order. Output is therefore bit-identical for
// any number of workers.
template <class Result, class ChunkFn, class FoldFn>
void chunked_reduce(std::ptrdiff_t total, std::ptrdiff_t chunk_size,
                    ChunkFn&& per_chunk, FoldFn&& fold) {
    if (total <= 0) return;
    const std::ptrdiff_t n_chunks = (total + chunk_size - 1) / chunk_size;
    std::vector<Result> results(static_cast<std::size_t>(n_chunks));

    const int workers = std::min<std::ptrdiff_t>(thread_count(), n_chunks);
    if (workers <= 1) {
        for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
            const std::ptrdiff_t b = c * chunk_size;
            const std::ptrdiff_t e = std::min(total, b + chunk_size);
            results[static_cast<std::size_t>(c)] = per_chunk(b, e, c);
        }
    } else {
        std::atomic<std::ptrdiff_t> next{0};
        auto work = [&] {
            for (;;) {
                const std::ptrdiff_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                const std::ptrdiff_t b = c * chunk_size;
                const std::ptrdiff_t e = std::min(total, b + chunk_size);
                results[static_cast<std::size_t>(c)] = per_chunk(b, e, c);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (std::ptrdiff_t c = 0; c < n_chunks; ++c)
        fold(results[static_cast<std::size_t>(c)], c);
}

} // namespace wce

#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace qhit {

// Fixed chunking: the item range is split into chunks of kChunkSize regardless
// of thread count, each chunk writes into its own slot and slots are merged in
// chunk order by the caller. Same seed => same bytes for any --threads value.
inline constexpr std::size_t kChunkSize = 1024;

inline std::size_t chunk_count(std::size_t n_items) {
    return (n_items + kChunkSize - 1) / kChunkSize;
}

// fn(chunk_index, begin_item, end_item)
inline void parallel_chunks(std::size_t n_items, int threads,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    const std::size_t n_chunks = chunk_count(n_items);
    if (n_chunks == 0) return;
    unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<std::size_t>(n_threads, n_chunks);

    if (n_threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * kChunkSize, std::min(n_items, (c + 1) * kChunkSize));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) return;
                fn(c, c * kChunkSize, std::min(n_items, (c + 1) * kChunkSize));
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace qhit

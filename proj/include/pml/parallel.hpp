#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace pml {

/// Number of worker threads used by block-parallel loops. The partition of
/// work into blocks is fixed (see kReduceBlock), so results are bitwise
/// identical for any thread count.
inline int& thread_count() {
    static int count = 1;
    return count;
}

inline void set_thread_count(int n) { thread_count() = n < 1 ? 1 : n; }

/// Fixed block length for reductions over pairs/probes. Must never depend on
/// the thread count: it defines the summation tree.
constexpr std::size_t kReduceBlock = 1024;

inline std::size_t block_count(std::size_t n) {
    return n == 0 ? 0 : (n + kReduceBlock - 1) / kReduceBlock;
}

/// Runs fn(block_index) for every block, possibly on several threads.
template <typename Fn>
void run_blocks(std::size_t n_blocks, Fn&& fn) {
    const int workers = thread_count();
    if (workers <= 1 || n_blocks <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks) break;
            fn(b);
        }
    };
    const std::size_t spawn =
        static_cast<std::size_t>(workers) < n_blocks ? static_cast<std::size_t>(workers) : n_blocks;
    std::vector<std::thread> pool;
    pool.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

/// Reduction over [0, n): per-block partial results are computed independently
/// (block_sum(begin, end) -> T) and combined strictly in block order, so the
/// result does not depend on the thread count.
template <typename T, typename BlockFn, typename CombineFn>
T block_reduce(std::size_t n, T zero, BlockFn&& block_sum, CombineFn&& combine) {
    const std::size_t n_blocks = block_count(n);
    if (n_blocks == 0) return zero;
    std::vector<T> partial(n_blocks, zero);
    run_blocks(n_blocks, [&](std::size_t b) {
        const std::size_t begin = b * kReduceBlock;
        const std::size_t end = begin + kReduceBlock < n ? begin + kReduceBlock : n;
        partial[b] = block_sum(begin, end);
    });
    T total = partial[0];
    for (std::size_t b = 1; b < n_blocks; ++b) total = combine(total, partial[b]);
    return total;
}

}  // namespace pml

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "diffc/io.hpp"

namespace diffc {

/// Run fn(first, last) over fixed-size blocks of [0, n) on up to
/// DIFFC_THREADS workers and combine the per-block results in block order,
/// so the reduction is identical no matter how many threads ran.
template <typename Result, typename BlockFn, typename CombineFn>
Result parallel_blocks(std::size_t n, BlockFn block_fn, CombineFn combine, Result init,
                       std::size_t block_size = 8192) {
    const std::size_t blocks = (n + block_size - 1) / block_size;
    std::vector<Result> partial(blocks);

    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(thread_budget(), blocks ? blocks : 1));
    if (workers <= 1) {
        for (std::size_t b = 0; b < blocks; ++b)
            partial[b] = block_fn(b * block_size, std::min(n, (b + 1) * block_size));
    } else {
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t b = w; b < blocks; b += workers)
                        partial[b] = block_fn(b * block_size, std::min(n, (b + 1) * block_size));
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

    Result acc = std::move(init);
    for (std::size_t b = 0; b < blocks; ++b) acc = combine(std::move(acc), partial[b]);
    return acc;
}

}  // namespace diffc

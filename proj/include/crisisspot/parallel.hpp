#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace crisisspot {

namespace detail {
inline std::atomic<std::size_t>& thread_count() {
    static std::atomic<std::size_t> n{1};
    return n;
}
}  // namespace detail

/// Worker threads used by the dense kernels. 1 (the default) runs inline.
inline void set_num_threads(std::size_t n) { detail::thread_count() = std::max<std::size_t>(1, n); }
inline std::size_t num_threads() { return detail::thread_count(); }

/// Calls fn(begin, end) over contiguous row ranges covering [0, rows).
/// Each row is handled by exactly one call, so per-row arithmetic and
/// therefore results do not depend on the thread count.
template <typename Fn>
void parallel_rows(std::size_t rows, std::size_t work_per_row, Fn&& fn) {
    constexpr std::size_t kMinWork = 1 << 16;
    const std::size_t threads =
        std::min({num_threads(), rows, std::max<std::size_t>(1, rows * work_per_row / kMinWork)});
    if (threads <= 1) {
        fn(std::size_t{0}, rows);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (rows + threads - 1) / threads;
    for (std::size_t t = 1; t < threads; ++t) {
        const std::size_t b = t * chunk, e = std::min(rows, b + chunk);
        if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(std::size_t{0}, std::min(rows, chunk));
    for (auto& th : pool) th.join();
}

}  // namespace crisisspot

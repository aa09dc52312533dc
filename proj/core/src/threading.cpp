#include "tokenforest/threading.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace tokenforest {

namespace {

int default_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<int>(std::min(hw, 8u));
}

std::atomic<int> g_max_threads{0};  // 0 = unset, use default

}  // namespace

int max_threads() {
    int n = g_max_threads.load(std::memory_order_relaxed);
    return n > 0 ? n : default_threads();
}

void set_max_threads(int n) {
    g_max_threads.store(n > 0 ? n : 0, std::memory_order_relaxed);
}

void parallel_for_blocks(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const std::int64_t span = end - begin;
    if (span <= 0) return;

    const int workers = std::min<std::int64_t>(max_threads(), span);
    if (workers <= 1 || span < 64) {
        fn(begin, end);
        return;
    }

    const std::int64_t chunk = (span + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const std::int64_t lo = begin + w * chunk;
        if (lo >= end) break;
        const std::int64_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace tokenforest

#pragma once

// Tiny fork-join helper. ASYMMKIT_THREADS caps the worker count (unset or 0
// means hardware concurrency). Work is split into contiguous index ranges and
// every output element is written by exactly one worker, so parallel runs are
// bitwise identical to serial ones.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace asymmkit {

inline int max_threads() {
    static const int cached = [] {
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("ASYMMKIT_THREADS")) {
            const int cap = std::atoi(env);
            if (cap > 0) hw = std::min(hw, cap);
        }
        return hw;
    }();
    return cached;
}

// Invokes fn(begin, end) on disjoint subranges of [0, count).
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& fn) {
    const int workers = static_cast<int>(std::min<std::int64_t>(max_threads(), count));
    if (workers <= 1 || count < 2048) {
        if (count > 0) fn(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::int64_t chunk = (count + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        const std::int64_t b = t * chunk;
        const std::int64_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace asymmkit

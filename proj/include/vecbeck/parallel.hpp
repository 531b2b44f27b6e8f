#pragma once

#include <cstddef>
#include <cstdlib>
#include <thread>
#include <vector>

namespace vecbeck {

// Width cap for data-parallel cell maps: min(hardware, VECBECK_THREADS).
inline int parallel_width() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("VECBECK_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
    }
    return static_cast<int>(hw);
}

// Runs f(i) for i in [0,n). Only for bodies whose writes are disjoint per i;
// reductions must stay sequential for reproducibility. Small n runs inline.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const int width = parallel_width();
    if (width <= 1 || n < 4096) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(width);
    const std::size_t chunk = (n + width - 1) / width;
    for (int t = 0; t < width; ++t) {
        const std::size_t lo = t * chunk;
        if (lo >= n) break;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &f] {
            for (std::size_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace vecbeck

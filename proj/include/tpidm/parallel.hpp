#ifndef TPIDM_PARALLEL_HPP
#define TPIDM_PARALLEL_HPP

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace tpidm {

// Worker count: TPIDM_THREADS if set and positive, else 1.
inline int thread_count() {
    if (const char* env = std::getenv("TPIDM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// Splits [0, n) into one contiguous block per worker and runs
// fn(worker, begin, end). Results that are reduced per worker in worker order
// stay deterministic regardless of scheduling.
inline void parallel_blocks(std::size_t n,
                            const std::function<void(int, std::size_t, std::size_t)>& fn) {
    const int workers = thread_count();
    if (workers <= 1 || n <= 1) {
        fn(0, 0, n);
        return;
    }
    const std::size_t per = (n + workers - 1) / static_cast<std::size_t>(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const std::size_t b = std::min(n, static_cast<std::size_t>(w) * per);
        const std::size_t e = std::min(n, b + per);
        if (b >= e) break;
        pool.emplace_back(fn, w, b, e);
    }
    for (auto& t : pool) t.join();
}

}  // namespace tpidm

#endif

// SPDX-License-Identifier: Apache-2.0
#include "fnx/common.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace fnx {

int max_threads() {
    static const int n = [] {
        if (const char* env = std::getenv("FNX_THREADS")) {
            const int v = std::atoi(env);
            if (v >= 1) return v;
        }
        const unsigned hc = std::thread::hardware_concurrency();
        return hc > 0 ? static_cast<int>(hc) : 1;
    }();
    return n;
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    static thread_local bool inside = false;
    const int threads = max_threads();
    if (inside || threads <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mutex;
    auto worker = [&] {
        inside = true;
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        }
        inside = false;
    };
    const size_t nw = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nw - 1);
    for (size_t t = 1; t < nw; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace fnx

#include "sssdet/common.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace sssdet {

namespace {

std::atomic<int> g_threads{0};

int default_threads()
{
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace

int thread_count()
{
    int n = g_threads.load(std::memory_order_relaxed);
    return n > 0 ? n : default_threads();
}

void set_thread_count(int n)
{
    g_threads.store(std::max(n, 0), std::memory_order_relaxed);
}

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn)
{
    if (n <= 0) {
        return;
    }
    int workers = std::min<int64_t>(thread_count(), n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    int64_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        int64_t begin = t * chunk;
        int64_t end = std::min<int64_t>(begin + chunk, n);
        if (begin >= end) {
            break;
        }
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) {
        th.join();
    }
}

} // namespace sssdet

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dcsvm {

// Runs fn(i) for i in [begin, end) on up to `workers` threads. Work items
// must write to disjoint state; results are then independent of scheduling.
template <typename Fn>
void parallel_for(int begin, int end, int workers, Fn&& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    if (workers <= 1 || count == 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    const int nthreads = std::min(workers, count);
    std::atomic<int> cursor{begin};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const int i = cursor.fetch_add(1);
                if (i >= end) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace dcsvm

#pragma once

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace cavshift {

// Runs f(i) for i in [0, n) on `workers` threads with interleaved static assignment.
// Each index is processed by exactly one thread, so results written per index are
// independent of the worker count. The first exception is rethrown on the caller.
template <class F>
void parallel_for(long n, int workers, F&& f) {
    if (workers <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i) f(i);
        return;
    }
    const int nt = int(std::min<long>(workers, n));
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (long i = t; i < n; i += nt) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace cavshift

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace pollcalc {

/// Worker count: hardware concurrency, capped by POLLCALC_THREADS when set.
inline unsigned default_threads()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("POLLCALC_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1)
            n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

namespace detail {

/// Runs body(0..count-1) on up to `threads` workers; the first exception is rethrown.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body)
{
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (workers == 1) {
        for (std::size_t r = 0; r < count; ++r)
            body(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t r = next++; r < count; r = next++) {
                try {
                    body(r);
                } catch (...) {
                    if (!failed.exchange(true))
                        failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace detail

} // namespace pollcalc

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace prim3d
{

inline unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/*!
 * Run `fn(i)` for every i in [0, n) on up to `threads` workers.
 *
 * Work is split into contiguous blocks. Callers write results into
 * per-index slots, so output never depends on the worker count. The first
 * exception thrown by any worker is rethrown on the calling thread.
 */
template<class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn)
{
    threads = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        std::size_t const block = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t)
        {
            std::size_t begin = t * block;
            std::size_t end = std::min(n, begin + block);
            if (begin >= end)
                break;
            workers.emplace_back([&, begin, end] {
                try
                {
                    for (std::size_t i = begin; i < end; ++i)
                        fn(i);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                }
            });
        }
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace prim3d

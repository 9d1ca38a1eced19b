#ifndef TCRANK_PARALLEL_HPP
#define TCRANK_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

/**
 * @file parallel.hpp
 * @brief Static block partitioning of index ranges over threads.
 */

namespace tcrank {

/**
 * Call `fun(start, end)` on contiguous blocks of `[0, n)`, one block per thread.
 * Results must be written to index-addressed storage so that the output does not depend on the schedule.
 * The first exception raised by any worker is rethrown.
 */
template<class Function_>
void parallel_for(std::size_t n, int num_threads, Function_ fun) {
    if (num_threads <= 1 || n < 2) {
        fun(static_cast<std::size_t>(0), n);
        return;
    }
    const std::size_t nworkers = std::min<std::size_t>(num_threads, n);
    const std::size_t per = n / nworkers, extra = n % nworkers;

    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(nworkers);
    workers.reserve(nworkers);
    std::size_t start = 0;
    for (std::size_t w = 0; w < nworkers; ++w) {
        const std::size_t len = per + (w < extra);
        workers.emplace_back([&, w, start, len]() {
            try {
                fun(start, start + len);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
        start += len;
    }
    for (auto& t : workers) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}

#endif

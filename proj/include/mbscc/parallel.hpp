#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mbscc {

/// Run `body(begin, end)` over [0, n) split into `workers` contiguous chunks.
///
/// Callers write results into per-index slots and reduce afterwards in index order,
/// which keeps every estimate independent of the worker count.
template <class Body>
void parallel_for_chunks(std::size_t n, unsigned workers, Body&& body) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < 2) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(chunks);
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        threads.emplace_back([&, c, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace mbscc

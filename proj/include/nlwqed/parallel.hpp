#pragma once

// Minimal worker pool: indices are handed out dynamically, results land in
// their own slots so the output order never depends on scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace nlwqed {

template <class F>
void parallel_for(std::size_t n, int threads, F&& fn) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
    };
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
    if (k <= 1) {
        work();
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(k);
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(work);
}

// Rethrows the exception of the lowest failing index after all work is done.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int threads, F&& fn) {
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, threads, [&](std::size_t i) {
        try {
            out[i] = fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace nlwqed

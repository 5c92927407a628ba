#pragma once

// Deterministic fork-join helpers. Work is split into contiguous chunks; callers write results to
// per-index slots and reduce in index order afterwards, so outputs never depend on thread count.

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ergograph {

/// Worker count: set_thread_count() if called with n > 0, else ERGOGRAPH_THREADS, else hardware.
int thread_count();
void set_thread_count(int n);

/// Calls body(begin, end, chunk) on disjoint chunks covering [0, n). Exceptions from the lowest
/// failing chunk are rethrown on the calling thread.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, int)>& body);

template <class F>
void parallel_for(std::size_t n, F&& f) {
  parallel_chunks(n, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t i = b; i < e; ++i) f(i);
  });
}

/// Number of chunks parallel_chunks will use for n items.
int chunk_count(std::size_t n);

}  // namespace ergograph

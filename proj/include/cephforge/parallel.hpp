#pragma once

#include <cstddef>
#include <functional>

namespace cephforge {

/// Worker count from CEPHFORGE_THREADS, else hardware concurrency (at least 1).
unsigned default_thread_count();

/// Runs body(i) for i in [0, n) over `threads` workers using fixed contiguous chunks.
/// Each index is visited exactly once; with threads <= 1 runs inline. The first
/// exception thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace cephforge

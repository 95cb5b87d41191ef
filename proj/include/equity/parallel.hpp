#pragma once

#include <cstddef>
#include <functional>

namespace equity {

// Effective worker count: an explicit request wins, then EQUITY_THREADS, then
// hardware concurrency; never below 1.
int worker_count(int requested = 0);

// Runs fn(i) for i in [0, n) across workers in contiguous chunks. Callers
// write results into pre-sized per-index slots, so the outcome does not
// depend on the worker count. The first exception thrown by any worker is
// rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int threads = 0);

}  // namespace equity

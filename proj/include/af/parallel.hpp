#pragma once

#include <cstddef>
#include <functional>

namespace af {

/// Thread cap: AF_THREADS when set (min 1), otherwise hardware concurrency.
std::size_t thread_budget();

/// Runs fn(i) for i in [0, n) across up to thread_budget() threads.
/// Callers write results into preallocated slots indexed by i, so the
/// outcome is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace af

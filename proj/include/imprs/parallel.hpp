#pragma once

#include <cstddef>
#include <functional>

namespace imprs {

/// Worker count used by parallel_for when none is given (default 1).
void set_worker_threads(int n);
int worker_threads();

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots so the outcome never depends on scheduling. If
/// bodies throw, the exception from the lowest index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace imprs

#pragma once

#include <cstddef>
#include <functional>

namespace lossforge {

/// Worker count from LOSSFORGE_THREADS; 0 or unset means
/// std::thread::hardware_concurrency().
int configured_threads();

/// Runs fn(0) .. fn(n - 1) on up to `threads` workers (<= 0 means
/// configured_threads()). Each index runs exactly once; callers write
/// results into per-index slots so the outcome does not depend on
/// scheduling. The first exception by index is rethrown after all workers
/// finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lossforge

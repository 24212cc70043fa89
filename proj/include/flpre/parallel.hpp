#pragma once

#include <cstddef>
#include <functional>

namespace flpre {

/// Worker count: FLPRE_THREADS when set (>= 1), else hardware concurrency.
std::size_t worker_count();

/// Runs body(k) for k in [0, count) on up to worker_count() threads. Each index
/// runs exactly once; callers write results into per-index slots so output
/// order does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace flpre

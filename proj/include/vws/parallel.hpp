#pragma once

#include <cstddef>
#include <functional>

namespace vws {

/// Worker count: hardware concurrency capped by the VWS_THREADS environment
/// variable (a positive integer). Always >= 1.
unsigned worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads using static
/// contiguous chunks. Bodies must only write to index-owned state, so results
/// do not depend on the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vws

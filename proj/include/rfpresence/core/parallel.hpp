#pragma once

#include <cstddef>
#include <functional>

namespace rfpresence {

/// Worker count: RFP_THREADS if set and positive, else hardware concurrency.
std::size_t WorkerCount();

/// Runs fn(i) for i in [0, n) on up to WorkerCount() threads. Each index is
/// visited exactly once; callers write results to index-owned slots so the
/// outcome does not depend on the thread count.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)> &fn);

} // namespace rfpresence

#pragma once

#include <cstddef>
#include <functional>

namespace synthpanel {

/// Thread cap: SYNTHPANEL_THREADS when set to a positive integer, otherwise
/// the hardware concurrency (at least 1).
unsigned default_thread_count();

/// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = default).
/// Each index is handled at most once; after a failure the exception from the
/// lowest failing index is rethrown once all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

}  // namespace synthpanel

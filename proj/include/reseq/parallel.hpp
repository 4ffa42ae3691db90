#pragma once

#include <cstddef>
#include <functional>

namespace reseq {

// hardware_concurrency, capped by RESEQ_THREADS when set. Always >= 1.
unsigned default_thread_count();

// Calls fn(i) for i in [0, count) on up to `threads` workers (0 = default).
// Work items are claimed from a shared counter, so fn must only write state
// owned by item i. The first exception thrown by any item is rethrown after
// all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace reseq

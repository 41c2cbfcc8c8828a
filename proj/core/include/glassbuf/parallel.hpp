#pragma once

#include <cstddef>
#include <functional>

namespace glassbuf {

// Number of worker threads used by parallel_for; defaults to the hardware
// concurrency. Set to 1 to force serial execution.
std::size_t worker_count();
void set_worker_count(std::size_t count);

// Runs body(i) for i in [0, count). Work items are claimed dynamically, so
// callers must write to disjoint outputs for results to be schedule-independent.
// The first exception thrown by any item is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace glassbuf

#pragma once

#include <cstddef>
#include <functional>

namespace memnet {

/// Worker count: MEMNET_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, count) over up to thread_count() threads. Each
/// index must write only its own output slot; results are then identical to a
/// sequential run. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace memnet

#pragma once

#include <cstddef>
#include <functional>

namespace nop {

/// Worker count: NOP_WORKERS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Indices are
/// claimed dynamically, so callers must write results by index. The first
/// exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = worker_count());

}  // namespace nop

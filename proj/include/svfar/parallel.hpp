#pragma once

#include <cstddef>
#include <functional>

namespace svfar {

/// Number of workers used by `parallel_for`. Defaults to the hardware
/// concurrency; 1 runs everything inline on the calling thread.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs `task(i)` for i in [0, n). Each index is executed exactly once and
/// tasks must only write to state owned by their index, so results do not
/// depend on the number of workers or on scheduling. The first exception
/// thrown by any task is rethrown after all workers have stopped.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

}  // namespace svfar

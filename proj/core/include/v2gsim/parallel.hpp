#pragma once

#include <cstddef>
#include <functional>

namespace v2gsim {

/// Number of workers to use when the caller asks for `requested` (0 = all cores).
[[nodiscard]] int resolve_workers(int requested);

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Work is handed
/// out by index; callers write results into slot i so the output order never
/// depends on scheduling. The first exception thrown by any job is rethrown
/// after all workers have stopped.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace v2gsim

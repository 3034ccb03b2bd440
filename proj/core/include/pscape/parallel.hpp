#pragma once

#include <cstddef>
#include <functional>

namespace pscape {

/// Worker cap for frame-parallel stages: PSCAPE_THREADS if set to a positive
/// integer, else 1.
int worker_count();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// visited exactly once; the first exception thrown is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

} // namespace pscape

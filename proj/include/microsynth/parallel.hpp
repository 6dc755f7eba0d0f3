#pragma once

#include <cstdint>
#include <functional>

namespace microsynth {

// Worker cap shared by all parallel loops. Defaults to MICROSYNTH_THREADS
// if set, else hardware concurrency. Output bytes never depend on it.
int max_threads();
void set_max_threads(int n);

// Runs fn over contiguous chunks of [0, n). fn(begin, end) must only write
// to slots indexed by its own range. Rethrows the first worker exception.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace microsynth

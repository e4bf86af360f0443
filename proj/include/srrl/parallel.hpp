#pragma once

#include <functional>

namespace srrl {

enum class ExecMode { serial, parallel };

// Runs fn(i) for i in [0, n). Parallel mode distributes iterations over
// OpenMP threads (falls back to the serial loop when built without OpenMP).
// Iterations must be independent: per-index RNG streams and per-index output
// slots, so both modes produce bitwise-identical results.
void for_each_index(int n, ExecMode mode, const std::function<void(int)>& fn);

// Number of threads the parallel mode would use (1 without OpenMP).
int max_threads();

}  // namespace srrl

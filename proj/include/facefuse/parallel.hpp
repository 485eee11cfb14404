#pragma once

#include <cstddef>
#include <functional>

namespace facefuse {

/// Worker count from FACEFUSE_THREADS (default: hardware concurrency, min 1).
/// Affects speed only; every caller reduces results in a fixed order.
std::size_t worker_count();

/// Overrides the environment for the current process (tests, CLI flag).
void set_worker_count(std::size_t n);

/// Runs body(i) for i in [0, n). Calls made from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace facefuse

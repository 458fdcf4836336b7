#pragma once

#include <cstddef>
#include <functional>

namespace mshoot {

/// Worker count: set_worker_count() if called, else the MSHOOT_THREADS
/// environment variable, else the hardware concurrency.
int worker_count();
void set_worker_count(int n);

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Items are
/// handed out dynamically, so body must write only to slot i of any shared
/// output. The exception thrown by the lowest failing index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mshoot

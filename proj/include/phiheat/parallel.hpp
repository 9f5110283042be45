#pragma once

#include <cstddef>
#include <functional>

namespace phiheat {

// Process-wide cap on worker threads; 0 means hardware concurrency.
void set_thread_cap(unsigned n);
unsigned thread_cap();

// Runs body(i) for i in [0, n). Every index is visited exactly once; results
// must be written to per-index slots so the outcome is independent of the
// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace phiheat

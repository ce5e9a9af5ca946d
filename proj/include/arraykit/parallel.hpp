#pragma once

#include <cstddef>
#include <functional>

namespace arraykit {

/// Worker count used by parallel loops; 0 means hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/// Runs body(i) for i in [0, n). Each index is processed exactly once and
/// bodies write only to their own output slots, so results never depend on
/// the number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body);

}  // namespace arraykit

#pragma once

#include <cstddef>
#include <functional>

namespace chanest {

/// Caps the number of worker threads used by parallel_for. 0 = hardware
/// concurrency. Thread count never changes numerical results: every parallel
/// loop in this library writes to index-addressed slots and reductions run
/// afterwards in index order.
void set_max_threads(int n);
int max_threads();

/// Runs fn(i) for i in [0, n). Work items must be independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace chanest

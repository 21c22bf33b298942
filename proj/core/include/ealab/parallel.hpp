#pragma once

#include <cstddef>
#include <functional>

namespace ealab {

// Worker count: LAB_THREADS when set (>= 1), else hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, count). Each index is visited exactly once; the
// caller writes results into per-index slots so reductions stay deterministic.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace ealab

#pragma once

#include <cstddef>
#include <functional>

namespace fbllab {

// Worker count: FBLLAB_THREADS when set (clamped to >= 1), else hardware concurrency.
std::size_t thread_count();

// Runs body(i) for i in [0, n). Each index writes only its own output slot, so the
// caller's reduction over slots is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fbllab

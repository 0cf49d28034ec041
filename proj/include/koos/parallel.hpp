#pragma once

#include <cstddef>
#include <functional>

namespace koos {

// Worker count for batch loops: KOOS_THREADS when set (clamped to >= 1),
// otherwise hardware concurrency. Read on every call so tests can vary the
// environment between runs.
unsigned thread_budget();

// Runs fn(i) for i in [0, count) across the thread budget with a static
// block partition. Each index must write only to its own output slot; under
// that contract results are identical for any thread count. Exceptions from
// workers are captured and rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace koos

#pragma once

#include <cstddef>
#include <functional>

namespace ssmrecon {

/// Worker count: SSMRECON_THREADS if set and positive, else hardware concurrency.
[[nodiscard]] unsigned worker_count();

/// Runs fn(i) for i in [0, n) on up to worker_count() threads. Each index is
/// visited exactly once; the exception of the lowest failing index is rethrown
/// after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ssmrecon

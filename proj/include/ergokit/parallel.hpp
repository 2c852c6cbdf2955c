#pragma once

#include <cstddef>
#include <functional>

namespace ergokit {

/// Worker count for internal parallel loops. Reads ERGOKIT_THREADS
/// (0 or unset = hardware concurrency).
std::size_t thread_count();

/// Runs body(i) for i in [0, n). Iterations must write disjoint state; the
/// result is independent of the number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ergokit

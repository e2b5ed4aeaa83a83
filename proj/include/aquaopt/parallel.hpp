#pragma once

#include <cstddef>
#include <functional>

namespace aquaopt {

/// Number of worker threads used by parallel_for; 1 means run inline.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Calls body(begin, end) over disjoint contiguous chunks covering [0, n).
/// Chunk boundaries depend only on n and `grain`, never on the thread
/// count, so per-element results are independent of parallelism.
void parallel_for(std::size_t n, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace aquaopt

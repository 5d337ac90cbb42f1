/// @file parallel.hpp
/// @brief Static work partitioning over std::thread, capped by OBBQ_THREADS.
#pragma once

#include <cstddef>
#include <functional>

namespace obbq {

/// Hardware concurrency, reduced to OBBQ_THREADS when that is a positive integer.
int worker_threads();

/// Calls body(begin, end) on contiguous chunks of [0, count). Each index is
/// visited exactly once, so results do not depend on the thread count as long
/// as body writes only to its own indices.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body,
                  int threads = 0);

}  // namespace obbq

#pragma once

#include <cstddef>
#include <functional>

namespace gpfr {

// Worker count for a request of 0 (all hardware threads) or n.
std::size_t resolve_threads(std::size_t requested) noexcept;

// Splits [0, n) into contiguous chunks, one per worker, and runs
// fn(begin, end) on each. Chunk boundaries depend only on n and the worker
// count. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& fn);

}  // namespace gpfr

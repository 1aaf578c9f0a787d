#pragma once

#include <cstddef>
#include <functional>

namespace cdiag {

// Worker count: $CD_THREADS if set, else `requested` if nonzero, else hardware concurrency.
unsigned resolve_threads(unsigned requested = 0);

// Calls body(begin, end) on contiguous chunks of [0, n). Chunks are disjoint,
// so bodies that only write their own range are race-free.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace cdiag

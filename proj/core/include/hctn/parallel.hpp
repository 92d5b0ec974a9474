#pragma once

#include <cstddef>
#include <functional>

namespace hctn {

/// Worker cap: min(hardware_concurrency, HCTN_THREADS if set). At least 1.
std::size_t max_threads();

/// Runs fn(i) for i in [0, n). Each index is processed exactly once and
/// writes only its own outputs, so results do not depend on the thread
/// count. Falls back to a plain loop for small n.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Chunked variant: fn(begin, end) over disjoint ranges.
void parallel_for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace hctn

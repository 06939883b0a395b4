#pragma once

#include <cstddef>
#include <functional>

namespace maxent_hjb {

/// Worker count: MAXENT_HJB_THREADS when set (>= 1), else hardware concurrency.
int thread_count();

/// Runs body(i) for i in [begin, end) on up to thread_count() threads using
/// contiguous static chunks. Bodies must write only to index-owned state.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& body);

}  // namespace maxent_hjb

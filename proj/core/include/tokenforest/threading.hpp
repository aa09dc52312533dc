#pragma once

#include <cstdint>
#include <functional>

namespace tokenforest {

/// Worker count for row-parallel matrix construction. Defaults to the
/// hardware concurrency, capped at 8. Results are entry-wise and therefore
/// identical for any setting.
int max_threads();
void set_max_threads(int n);

/// Runs fn(begin, end) over disjoint blocks of [begin, end) on up to
/// max_threads() threads and joins. Falls back to a direct call for small
/// ranges.
void parallel_for_blocks(std::int64_t begin, std::int64_t end,
                         const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace tokenforest

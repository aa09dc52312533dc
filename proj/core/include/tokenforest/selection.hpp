#pragma once

#include "tokenforest/types.hpp"

namespace tokenforest {

/// Picks per-frame representative tokens as candidate tree nodes.
///
/// Every frame contributes exactly nodes_per_frame(keep_ratio, N, selector)
/// nodes: `all` keeps every token, `random` samples uniformly without
/// replacement from a per-frame stream keyed by (seed, frame), and
/// `norm_saliency` keeps the largest-L2-norm tokens (ties to the smaller
/// grid index, zero norms ranked last). Output ids preserve global
/// (frame, grid_index) order and carry L2-normalized embeddings.
///
/// Throws DataError for a frame of all-zero embeddings under norm_saliency
/// ("degenerate frame") and whenever a selected token has zero norm.
NodeSet select_nodes(const VideoTokens& video, double keep_ratio, SelectorKind selector,
                     std::uint64_t seed);

}  // namespace tokenforest

#pragma once

#include "tokenforest/forest.hpp"
#include "tokenforest/pruner.hpp"
#include "tokenforest/types.hpp"

namespace tokenforest::oracle {

/// Brute-force references for the forest builder and the pruner. Everything
/// here is recomputed with plain nested loops and full rescans — no shared
/// logic with the main path beyond the data types — so agreement is a real
/// check. Same comparison semantics (exact >=/<= on stored values, same tie
/// rules), intended for small instances (|nodes| <= ~256).

PairMatrices oracle_pair_matrices(const NodeSet& nodes, const PruneConfig& config);

/// Forest construction including the greedy root-similarity merge down to
/// `budget` trees.
Forest oracle_forest(const NodeSet& nodes, const PruneConfig& config, std::int64_t budget);

/// Phase-rule replay by literal list scanning.
PruneResult oracle_prune(const Forest& forest, const NodeSet& nodes, std::int64_t budget);

}  // namespace tokenforest::oracle

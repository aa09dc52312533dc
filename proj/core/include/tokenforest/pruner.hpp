#pragma once

#include "tokenforest/forest.hpp"
#include "tokenforest/types.hpp"

namespace tokenforest {

enum class RemovalReason {
    Orphan,
    Leaf,
    Tail,
    RootFallback,
};

std::string removal_reason_to_string(RemovalReason reason);
RemovalReason removal_reason_from_string(const std::string& name);

struct RemovalEvent {
    int step = 0;
    NodeId node = 0;
    RemovalReason reason = RemovalReason::Orphan;
    NodeId tree_root = -1;  // -1 for orphans

    bool operator==(const RemovalEvent&) const = default;
};

/// Auditable pruning log: the removal order is a permutation of
/// (all nodes - retained), and replaying it against the initial forest
/// reproduces the retained set.
using RemovalTrace = std::vector<RemovalEvent>;

/// Members with no children, excluding the root (roots stay protected
/// until the final fallback). A singleton tree therefore has none.
std::vector<NodeId> find_leaves(const Tree& tree);

struct RemoveTailResult {
    Tree tree;
    std::vector<NodeId> removed;  // the max-timestep member group
    bool exhausted = false;       // tree had <= 1 member, nothing to do
};

/// Drops every member at the tree's maximum timestep, splicing any children
/// of a removed node onto its parent, and recomputes the depth.
RemoveTailResult remove_tail(const Tree& tree, const NodeSet& nodes);

struct PruneOutput {
    PruneResult result;
    RemovalTrace trace;
};

/// Reduces the forest to exactly `budget` retained nodes.
///
/// Removal runs in four phases, each a deterministic total order so that a
/// smaller budget is always a continuation of a larger one:
///   0. orphans, latest frame first, then largest id;
///   1. the forest's leaf nodes (roles fixed at phase entry), visiting
///      trees per sweep in descending depth (ties: more members, then
///      smaller root id) and removing a tree's leaves latest-frame-first;
///   2. tail groups via remove_tail, same tree ordering per round, largest
///      id first within a group;
///   3. only roots remain: latest-frame roots go first, keeping the
///      earliest-frame roots (ties to the smaller id).
/// Stops exactly at the budget. A budget above the node count returns all
/// nodes with budget_unreachable set.
PruneOutput prune_to_budget(const Forest& forest, const NodeSet& nodes, std::int64_t budget);

struct PruneOutcome {
    PruneResult result;
    RemovalTrace trace;
    Forest forest;  // the merged forest pruning ran on
    NodeSet nodes;
    std::int64_t budget = 0;
};

/// Full pipeline: node selection, forest construction, tree merging and
/// budgeted pruning. Tokens never selected as nodes count toward the
/// removed fraction. Throws std::invalid_argument when the selection
/// cannot supply the budget (keep_ratio too low for budget_ratio).
PruneOutcome prune_video(const VideoTokens& video, const PruneConfig& config);

/// prune_video with an explicit budget instead of config.budget_ratio.
PruneOutcome prune_video_with_budget(const VideoTokens& video, const PruneConfig& config,
                                     std::int64_t budget);

}  // namespace tokenforest

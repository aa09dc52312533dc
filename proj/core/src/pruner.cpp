#include "tokenforest/pruner.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_map>
#include <unordered_set>

#include "tokenforest/selection.hpp"

namespace tokenforest {

std::string removal_reason_to_string(RemovalReason reason) {
    switch (reason) {
        case RemovalReason::Orphan: return "orphan";
        case RemovalReason::Leaf: return "leaf";
        case RemovalReason::Tail: return "tail";
        case RemovalReason::RootFallback: return "root_fallback";
    }
    throw std::invalid_argument("invalid removal reason");
}

RemovalReason removal_reason_from_string(const std::string& name) {
    if (name == "orphan") return RemovalReason::Orphan;
    if (name == "leaf") return RemovalReason::Leaf;
    if (name == "tail") return RemovalReason::Tail;
    if (name == "root_fallback") return RemovalReason::RootFallback;
    throw std::invalid_argument("unknown removal reason '" + name + "'");
}

std::vector<NodeId> find_leaves(const Tree& tree) {
    std::unordered_set<NodeId> has_child;
    for (const auto& [child, parent] : tree.parent) has_child.insert(parent);

    std::vector<NodeId> leaves;
    for (NodeId m : tree.members) {
        if (m == tree.root) continue;
        if (!has_child.count(m)) leaves.push_back(m);
    }
    return leaves;
}

RemoveTailResult remove_tail(const Tree& tree, const NodeSet& nodes) {
    RemoveTailResult out;
    out.tree = tree;
    if (tree.members.size() <= 1) {
        out.exhausted = true;
        return out;
    }

    int max_frame = -1;
    for (NodeId m : tree.members) {
        const int frame = nodes.nodes[nodes.index_of(m)].frame;
        max_frame = std::max(max_frame, frame);
    }

    std::unordered_set<NodeId> tail;
    for (NodeId m : tree.members) {
        if (nodes.nodes[nodes.index_of(m)].frame == max_frame) tail.insert(m);
    }

    // Splice children of removed nodes onto their grandparent. With strictly
    // time-increasing edges a max-timestep node is childless, but merged or
    // hand-built trees are handled all the same.
    for (auto& [child, parent] : out.tree.parent) {
        while (tail.count(parent)) parent = out.tree.parent.at(parent);
    }
    for (NodeId t : tail) out.tree.parent.erase(t);
    std::erase_if(out.tree.members, [&](NodeId m) { return tail.count(m) > 0; });

    out.removed.assign(tail.begin(), tail.end());
    std::sort(out.removed.begin(), out.removed.end());
    out.tree.depth = tree_depth(out.tree.root, out.tree.members, out.tree.parent);
    return out;
}

namespace {

/// Mutable pruning state for one tree.
struct TreeState {
    NodeId root = 0;
    std::unordered_set<NodeId> alive;
    std::unordered_map<NodeId, NodeId> parent;
    std::unordered_map<NodeId, std::vector<NodeId>> children;
    int depth = 0;

    int member_count() const { return static_cast<int>(alive.size()); }

    void recompute_depth(const NodeSet&) {
        std::vector<NodeId> members(alive.begin(), alive.end());
        std::sort(members.begin(), members.end());
        std::map<NodeId, NodeId> pmap(parent.begin(), parent.end());
        depth = tree_depth(root, members, pmap);
    }

    void remove(NodeId id) {
        // children of id (if any) splice onto its parent
        auto cit = children.find(id);
        if (cit != children.end() && !cit->second.empty()) {
            const NodeId up = parent.at(id);
            for (NodeId child : cit->second) {
                parent[child] = up;
                children[up].push_back(child);
            }
        }
        children.erase(id);
        auto pit = parent.find(id);
        if (pit != parent.end()) {
            auto& sibs = children[pit->second];
            sibs.erase(std::find(sibs.begin(), sibs.end(), id));
            parent.erase(pit);
        }
        alive.erase(id);
    }
};

struct Pruner {
    const NodeSet& nodes;
    std::int64_t to_remove;
    RemovalTrace trace;
    std::vector<TreeState> trees;
    std::vector<NodeId> orphans;

    int frame_of(NodeId id) const { return nodes.nodes[nodes.index_of(id)].frame; }

    bool done() const { return to_remove == 0; }

    void record(NodeId id, RemovalReason reason, NodeId tree_root) {
        trace.push_back({static_cast<int>(trace.size()), id, reason, tree_root});
        --to_remove;
    }

    /// Tree visiting order shared by the leaf and tail phases: deeper trees
    /// first, then more members, then the smaller root id.
    std::vector<int> tree_order() const {
        std::vector<int> order;
        order.reserve(trees.size());
        for (int i = 0; i < static_cast<int>(trees.size()); ++i) order.push_back(i);
        std::sort(order.begin(), order.end(), [this](int x, int y) {
            const TreeState& a = trees[x];
            const TreeState& b = trees[y];
            if (a.depth != b.depth) return a.depth > b.depth;
            if (a.member_count() != b.member_count()) return a.member_count() > b.member_count();
            return a.root < b.root;
        });
        return order;
    }

    void phase0_orphans() {
        std::sort(orphans.begin(), orphans.end(), [this](NodeId a, NodeId b) {
            const int fa = frame_of(a);
            const int fb = frame_of(b);
            if (fa != fb) return fa > fb;
            return a > b;
        });
        for (NodeId o : orphans) {
            if (done()) return;
            record(o, RemovalReason::Orphan, -1);
        }
    }

    void phase1_leaves() {
        // Leaf roles are fixed when the phase starts; interior nodes whose
        // children disappear stay protected until the tail phase.
        std::unordered_set<NodeId> leaf_role;
        for (const TreeState& t : trees) {
            for (NodeId m : t.alive) {
                if (m != t.root && t.children.find(m) == t.children.end()) leaf_role.insert(m);
            }
        }

        bool removed_any = true;
        while (!done() && removed_any) {
            removed_any = false;
            for (int ti : tree_order()) {
                TreeState& tree = trees[ti];
                std::vector<NodeId> leaves;
                for (NodeId m : tree.alive) {
                    if (leaf_role.count(m)) leaves.push_back(m);
                }
                std::sort(leaves.begin(), leaves.end(), [this](NodeId a, NodeId b) {
                    const int fa = frame_of(a);
                    const int fb = frame_of(b);
                    if (fa != fb) return fa > fb;
                    return a > b;
                });
                for (NodeId leaf : leaves) {
                    tree.remove(leaf);
                    removed_any = true;
                    record(leaf, RemovalReason::Leaf, tree.root);
                    if (done()) return;
                }
                tree.recompute_depth(nodes);
            }
        }
    }

    void phase2_tails() {
        bool progressed = true;
        while (!done() && progressed) {
            progressed = false;
            for (int ti : tree_order()) {
                TreeState& tree = trees[ti];
                if (tree.member_count() <= 1) continue;

                int max_frame = -1;
                for (NodeId m : tree.alive) max_frame = std::max(max_frame, frame_of(m));
                std::vector<NodeId> group;
                for (NodeId m : tree.alive) {
                    if (frame_of(m) == max_frame) group.push_back(m);
                }
                std::sort(group.begin(), group.end(), std::greater<NodeId>());

                for (NodeId g : group) {
                    tree.remove(g);
                    progressed = true;
                    record(g, RemovalReason::Tail, tree.root);
                    if (done()) return;
                }
                tree.recompute_depth(nodes);
            }
        }
    }

    void phase3_roots() {
        std::vector<std::pair<NodeId, NodeId>> roots;  // (root, owning root) — identical here
        for (const TreeState& t : trees) {
            assert(t.member_count() == 1);
            roots.emplace_back(t.root, t.root);
        }
        std::sort(roots.begin(), roots.end(), [this](const auto& a, const auto& b) {
            const int fa = frame_of(a.first);
            const int fb = frame_of(b.first);
            if (fa != fb) return fa > fb;
            return a.first > b.first;
        });
        for (const auto& [root, owner] : roots) {
            if (done()) return;
            record(root, RemovalReason::RootFallback, owner);
        }
    }
};

PruneResult make_result(const std::vector<NodeId>& retained, const NodeSet& nodes,
                        bool unreachable) {
    PruneResult result;
    result.retained = retained;
    std::sort(result.retained.begin(), result.retained.end());
    result.frames = nodes.frames;
    result.tokens_per_frame = nodes.tokens_per_frame;
    result.per_frame_counts.assign(nodes.frames, 0);
    for (NodeId id : result.retained) {
        result.per_frame_counts[id / nodes.tokens_per_frame] += 1;
    }
    const double total = static_cast<double>(nodes.frames) * nodes.tokens_per_frame;
    result.achieved_budget = static_cast<double>(result.retained.size()) / total;
    result.budget_unreachable = unreachable;
    return result;
}

}  // namespace

PruneOutput prune_to_budget(const Forest& forest, const NodeSet& nodes, std::int64_t budget) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");

    std::vector<NodeId> all_nodes(forest.orphans);
    for (const Tree& t : forest.trees) {
        all_nodes.insert(all_nodes.end(), t.members.begin(), t.members.end());
    }

    PruneOutput out;
    if (budget >= static_cast<std::int64_t>(all_nodes.size())) {
        out.result = make_result(all_nodes, nodes,
                                 budget > static_cast<std::int64_t>(all_nodes.size()));
        return out;
    }

    Pruner state{nodes, static_cast<std::int64_t>(all_nodes.size()) - budget, {}, {}, {}};
    state.orphans = forest.orphans;
    state.trees.reserve(forest.trees.size());
    for (const Tree& t : forest.trees) {
        TreeState ts;
        ts.root = t.root;
        ts.alive.insert(t.members.begin(), t.members.end());
        ts.parent.insert(t.parent.begin(), t.parent.end());
        for (const auto& [child, parent] : t.parent) ts.children[parent].push_back(child);
        ts.depth = t.depth;
        state.trees.push_back(std::move(ts));
    }

    state.phase0_orphans();
    if (!state.done()) state.phase1_leaves();
    if (!state.done()) state.phase2_tails();
    if (!state.done()) state.phase3_roots();
    assert(state.done());

    std::unordered_set<NodeId> removed;
    removed.reserve(state.trace.size());
    for (const RemovalEvent& e : state.trace) removed.insert(e.node);
    std::vector<NodeId> retained;
    retained.reserve(all_nodes.size() - removed.size());
    for (NodeId id : all_nodes) {
        if (!removed.count(id)) retained.push_back(id);
    }

    out.result = make_result(retained, nodes, false);
    out.trace = std::move(state.trace);
    return out;
}

PruneOutcome prune_video(const VideoTokens& video, const PruneConfig& config) {
    const std::int64_t budget =
        compute_budget(config.budget_ratio, video.frames, video.tokens_per_frame);
    return prune_video_with_budget(video, config, budget);
}

PruneOutcome prune_video_with_budget(const VideoTokens& video, const PruneConfig& config,
                                     std::int64_t budget) {
    config.validate();
    video.validate();

    const int per_frame = nodes_per_frame(config.keep_ratio, video.tokens_per_frame, config.selector);
    const std::int64_t available = static_cast<std::int64_t>(per_frame) * video.frames;
    if (available < budget) {
        throw std::invalid_argument(
            "keep_ratio admits " + std::to_string(available) + " candidate nodes but the budget "
            "requires " + std::to_string(budget) + "; raise --keep-ratio or --ratio");
    }

    PruneOutcome outcome;
    outcome.budget = budget;
    outcome.nodes = select_nodes(video, config.keep_ratio, config.selector, config.seed);
    outcome.forest = build_forest(outcome.nodes, config, budget);
    PruneOutput pruned = prune_to_budget(outcome.forest, outcome.nodes, budget);
    outcome.result = std::move(pruned.result);
    outcome.trace = std::move(pruned.trace);
    return outcome;
}

}  // namespace tokenforest

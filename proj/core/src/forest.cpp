#include "tokenforest/forest.hpp"

#include <algorithm>
#include <iostream>
#include <queue>
#include <unordered_map>

#include "tokenforest/threading.hpp"

namespace tokenforest {

namespace {

constexpr double kRankEpsilon = 1e-9;

/// True when candidate parent (pa) beats the incumbent (pb) for the same
/// child: higher score, then later frame, then smaller id.
bool better_parent(float score_a, int frame_a, NodeId id_a,
                   float score_b, int frame_b, NodeId id_b) {
    if (score_a != score_b) return score_a > score_b;
    if (frame_a != frame_b) return frame_a > frame_b;
    return id_a < id_b;
}

}  // namespace

MatrixF cosine_adjacency(const NodeSet& nodes) {
    const int k = nodes.size();
    const int dim = nodes.dim;
    MatrixF a(k);
    parallel_for_blocks(0, k, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            const float* ui = nodes.unit(static_cast<int>(i));
            for (int j = static_cast<int>(i); j < k; ++j) {
                const float s = detail::unit_dot(ui, nodes.unit(j), dim);
                a.at(static_cast<int>(i), j) = s;
                a.at(j, static_cast<int>(i)) = s;
            }
        }
    });
    return a;
}

MatrixF spatial_distance(const NodeSet& nodes) {
    const int k = nodes.size();
    MatrixF d(k);
    parallel_for_blocks(0, k, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            const Node& ni = nodes.nodes[static_cast<std::size_t>(i)];
            for (int j = static_cast<int>(i); j < k; ++j) {
                const Node& nj = nodes.nodes[j];
                const float dist = detail::coord_distance(ni.x, ni.y, nj.x, nj.y);
                d.at(static_cast<int>(i), j) = dist;
                d.at(j, static_cast<int>(i)) = dist;
            }
        }
    });
    return d;
}

MatrixU8 connection_matrix(const MatrixF& a, const MatrixF& d, const NodeSet& nodes,
                           double tau_s, double tau_p) {
    const int k = nodes.size();
    MatrixU8 c(k);
    parallel_for_blocks(0, k, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            const int fi = nodes.nodes[static_cast<std::size_t>(i)].frame;
            for (int j = 0; j < k; ++j) {
                const bool connected = static_cast<double>(a.at(static_cast<int>(i), j)) >= tau_s &&
                                       static_cast<double>(d.at(static_cast<int>(i), j)) <= tau_p &&
                                       fi < nodes.nodes[j].frame;
                c.at(static_cast<int>(i), j) = connected ? 1 : 0;
            }
        }
    });
    return c;
}

RootScan find_roots(const MatrixU8& c) {
    const int k = c.k;
    std::vector<int> in_degree(k, 0);
    std::vector<int> out_degree(k, 0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (c.at(i, j)) {
                ++out_degree[i];
                ++in_degree[j];
            }
        }
    }
    RootScan scan;
    for (int j = 0; j < k; ++j) {
        if (in_degree[j] == 0) {
            if (out_degree[j] > 0) {
                scan.roots.push_back(j);
            } else {
                scan.isolated.push_back(j);
            }
        }
    }
    return scan;
}

MatrixF rank_matrix(const MatrixU8& c, const MatrixF& a, const MatrixF& d, double lambda) {
    const int k = c.k;
    MatrixF p(k);
    parallel_for_blocks(0, k, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            for (int j = 0; j < k; ++j) {
                if (!c.at(static_cast<int>(i), j)) continue;
                double score = static_cast<double>(a.at(static_cast<int>(i), j)) -
                               lambda * static_cast<double>(d.at(static_cast<int>(i), j));
                if (score <= 0.0) score = kRankEpsilon;
                p.at(static_cast<int>(i), j) = static_cast<float>(score);
            }
        }
    });
    return p;
}

Assignment assign_children(const MatrixF& p, const NodeSet& nodes, const RootScan& roots) {
    const int k = p.k;
    Assignment out;
    out.best_parent.assign(k, -1);
    out.root_of.assign(k, -1);

    parallel_for_blocks(0, k, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t j = lo; j < hi; ++j) {
            int best = -1;
            for (int i = 0; i < k; ++i) {
                const float score = p.at(i, static_cast<int>(j));
                if (score <= 0.0f) continue;  // p > 0 exactly where connected
                if (best < 0 ||
                    better_parent(score, nodes.nodes[i].frame, nodes.nodes[i].id,
                                  p.at(best, static_cast<int>(j)), nodes.nodes[best].frame,
                                  nodes.nodes[best].id)) {
                    best = i;
                }
            }
            out.best_parent[static_cast<int>(j)] = best;
        }
    });

    std::vector<char> is_root(k, 0);
    for (int r : roots.roots) is_root[r] = 1;

    // Follow best-parent links upward; frames strictly decrease, so the
    // walk terminates at a zero-in-degree node, which is a root.
    for (int j = 0; j < k; ++j) {
        if (out.best_parent[j] < 0) continue;
        int cur = j;
        std::vector<int> path;
        while (out.best_parent[cur] >= 0 && out.root_of[cur] < 0) {
            path.push_back(cur);
            cur = out.best_parent[cur];
        }
        const int root = out.best_parent[cur] < 0 ? cur : out.root_of[cur];
        for (int n : path) out.root_of[n] = root;
    }
    return out;
}

LinkResult link_nodes(int root_pos, const std::vector<int>& member_pos, const NodeSet& nodes,
                      const MatrixU8& c, const MatrixF& p) {
    LinkResult result;

    // Members grouped by frame, walked in ascending order. A member either
    // attaches to a still-linked earlier member or is demoted; demoted
    // members are no longer parent candidates for later frames.
    std::vector<int> ordered(member_pos);
    std::sort(ordered.begin(), ordered.end(), [&](int a, int b) {
        if (nodes.nodes[a].frame != nodes.nodes[b].frame)
            return nodes.nodes[a].frame < nodes.nodes[b].frame;
        return nodes.nodes[a].id < nodes.nodes[b].id;
    });

    std::vector<int> linked;  // positions already attached (or the root)
    linked.reserve(ordered.size());
    std::vector<NodeId> kept_members;

    for (int pos : ordered) {
        if (pos == root_pos) {
            linked.push_back(pos);
            kept_members.push_back(nodes.nodes[pos].id);
            continue;
        }
        const int frame = nodes.nodes[pos].frame;
        int best = -1;
        for (int cand : linked) {
            if (nodes.nodes[cand].frame >= frame) continue;
            if (!c.at(cand, pos)) continue;
            const float score = p.at(cand, pos);
            if (best < 0 ||
                better_parent(score, nodes.nodes[cand].frame, nodes.nodes[cand].id,
                              p.at(best, pos), nodes.nodes[best].frame, nodes.nodes[best].id)) {
                best = cand;
            }
        }
        if (best < 0) {
            result.demoted.push_back(nodes.nodes[pos].id);
            continue;
        }
        result.parent[nodes.nodes[pos].id] = nodes.nodes[best].id;
        linked.push_back(pos);
        kept_members.push_back(nodes.nodes[pos].id);
    }

    if (!result.demoted.empty()) {
        std::cerr << "tokenforest: warning: " << result.demoted.size()
                  << " member(s) of tree rooted at node " << nodes.nodes[root_pos].id
                  << " could not attach and were demoted to orphans\n";
    }

    std::sort(kept_members.begin(), kept_members.end());
    result.depth = tree_depth(nodes.nodes[root_pos].id, kept_members, result.parent);
    return result;
}

int tree_depth(NodeId root, const std::vector<NodeId>& members,
               const std::map<NodeId, NodeId>& parent) {
    std::unordered_map<NodeId, int> depth;
    depth.reserve(members.size());
    depth[root] = 0;
    int longest = 0;

    // parent frames strictly precede child frames, so resolving each member
    // by walking up terminates; memoized for linear total work.
    for (NodeId m : members) {
        std::vector<NodeId> chain;
        NodeId cur = m;
        while (depth.find(cur) == depth.end()) {
            chain.push_back(cur);
            cur = parent.at(cur);
        }
        int d = depth[cur];
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            depth[*it] = ++d;
        }
        longest = std::max(longest, depth[m]);
    }
    return longest;
}

Forest build_forest(const NodeSet& nodes, const PruneConfig& config,
                    const PairMatrices& mats) {
    config.validate();
    const RootScan scan = find_roots(mats.c);
    const Assignment assignment = assign_children(mats.p, nodes, scan);

    Forest forest;
    for (int iso : scan.isolated) {
        forest.orphans.push_back(nodes.nodes[iso].id);
    }

    std::unordered_map<int, std::vector<int>> members_by_root;
    for (int r : scan.roots) members_by_root[r];  // every root owns its tree
    for (int j = 0; j < nodes.size(); ++j) {
        const int r = assignment.root_of[j];
        if (r >= 0) members_by_root[r].push_back(j);
    }

    for (int r : scan.roots) {
        auto& member_pos = members_by_root[r];
        member_pos.push_back(r);

        Tree tree;
        tree.root = nodes.nodes[r].id;
        LinkResult link = link_nodes(r, member_pos, nodes, mats.c, mats.p);
        tree.parent = std::move(link.parent);
        tree.depth = link.depth;

        tree.members.push_back(tree.root);
        for (const auto& [child, _] : tree.parent) tree.members.push_back(child);
        std::sort(tree.members.begin(), tree.members.end());

        for (NodeId demoted : link.demoted) forest.orphans.push_back(demoted);
        forest.trees.push_back(std::move(tree));
    }

    std::sort(forest.trees.begin(), forest.trees.end(),
              [](const Tree& a, const Tree& b) { return a.root < b.root; });
    std::sort(forest.orphans.begin(), forest.orphans.end());
    return forest;
}

Forest build_forest(const NodeSet& nodes, const PruneConfig& config) {
    return build_forest(nodes, config, compute_pair_matrices(nodes, config));
}

Forest build_forest(const NodeSet& nodes, const PruneConfig& config, std::int64_t budget) {
    const PairMatrices mats = compute_pair_matrices(nodes, config);
    Forest forest = build_forest(nodes, config, mats);
    if (static_cast<std::int64_t>(forest.trees.size()) <= budget) return forest;
    return merge_trees(forest, budget, mats.a, nodes, config.tau_s);
}

PairMatrices compute_pair_matrices(const NodeSet& nodes, const PruneConfig& config) {
    PairMatrices mats;
    mats.a = cosine_adjacency(nodes);
    mats.d = spatial_distance(nodes);
    mats.c = connection_matrix(mats.a, mats.d, nodes, config.tau_s, config.tau_p);
    mats.p = rank_matrix(mats.c, mats.a, mats.d, config.lambda);
    return mats;
}

Forest merge_trees(const Forest& forest, std::int64_t budget, const MatrixF& a,
                   const NodeSet& nodes, double tau_s) {
    Forest out = forest;
    out.merge_floor_hit = false;
    if (static_cast<std::int64_t>(out.trees.size()) <= budget) return out;

    const double floor = tau_s / 2.0;

    struct Candidate {
        float sim;
        NodeId lo;  // smaller root id
        NodeId hi;  // larger root id
    };
    struct CandidateLess {
        bool operator()(const Candidate& x, const Candidate& y) const {
            if (x.sim != y.sim) return x.sim < y.sim;  // max-heap on similarity
            if (x.lo != y.lo) return x.lo > y.lo;      // then smallest id pair
            return x.hi > y.hi;
        }
    };

    std::priority_queue<Candidate, std::vector<Candidate>, CandidateLess> heap;
    const auto root_frame = [&](NodeId id) { return nodes.nodes[nodes.index_of(id)].frame; };

    for (std::size_t i = 0; i < out.trees.size(); ++i) {
        for (std::size_t j = i + 1; j < out.trees.size(); ++j) {
            const NodeId ra = out.trees[i].root;
            const NodeId rb = out.trees[j].root;
            if (root_frame(ra) == root_frame(rb)) continue;  // edge could not advance in time
            const float sim = a.at(nodes.index_of(ra), nodes.index_of(rb));
            if (static_cast<double>(sim) < floor) continue;
            heap.push({sim, std::min(ra, rb), std::max(ra, rb)});
        }
    }

    std::unordered_map<NodeId, std::size_t> tree_of_root;
    for (std::size_t i = 0; i < out.trees.size(); ++i) tree_of_root[out.trees[i].root] = i;

    std::int64_t live = static_cast<std::int64_t>(out.trees.size());
    while (live > budget && !heap.empty()) {
        const Candidate cand = heap.top();
        heap.pop();
        auto it_lo = tree_of_root.find(cand.lo);
        auto it_hi = tree_of_root.find(cand.hi);
        if (it_lo == tree_of_root.end() || it_hi == tree_of_root.end()) continue;  // stale pair

        // The earlier-frame root absorbs the later one.
        NodeId parent_root = cand.lo;
        NodeId child_root = cand.hi;
        if (root_frame(child_root) < root_frame(parent_root)) std::swap(parent_root, child_root);

        Tree& parent_tree = out.trees[tree_of_root[parent_root]];
        Tree& child_tree = out.trees[tree_of_root[child_root]];

        parent_tree.parent.insert(child_tree.parent.begin(), child_tree.parent.end());
        parent_tree.parent[child_root] = parent_root;
        parent_tree.members.insert(parent_tree.members.end(), child_tree.members.begin(),
                                   child_tree.members.end());
        std::sort(parent_tree.members.begin(), parent_tree.members.end());
        parent_tree.depth = tree_depth(parent_root, parent_tree.members, parent_tree.parent);

        tree_of_root.erase(child_root);
        child_tree.members.clear();  // marks the slot dead
        --live;
    }

    out.merge_floor_hit = live > budget;

    std::vector<Tree> kept;
    kept.reserve(static_cast<std::size_t>(live));
    for (Tree& t : out.trees) {
        if (!t.members.empty()) kept.push_back(std::move(t));
    }
    out.trees = std::move(kept);
    std::sort(out.trees.begin(), out.trees.end(),
              [](const Tree& x, const Tree& y) { return x.root < y.root; });
    return out;
}

}  // namespace tokenforest

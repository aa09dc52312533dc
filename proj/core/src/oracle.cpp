#include "tokenforest/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace tokenforest::oracle {

namespace {

float dot_clamped(const float* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    if (acc > 1.0) acc = 1.0;
    if (acc < -1.0) acc = -1.0;
    return static_cast<float>(acc);
}

float distance(const Node& a, const Node& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return static_cast<float>(std::sqrt(dx * dx + dy * dy));
}

int frame_at(const NodeSet& nodes, int pos) { return nodes.nodes[pos].frame; }
NodeId id_at(const NodeSet& nodes, int pos) { return nodes.nodes[pos].id; }

/// Prefer candidate parent x over y: higher score, later frame, smaller id.
bool parent_wins(float sx, int fx, NodeId ix, float sy, int fy, NodeId iy) {
    if (sx != sy) return sx > sy;
    if (fx != fy) return fx > fy;
    return ix < iy;
}

int chain_length_to_root(NodeId node, const std::map<NodeId, NodeId>& parent) {
    int n = 0;
    NodeId cur = node;
    while (parent.count(cur)) {
        cur = parent.at(cur);
        ++n;
    }
    return n;
}

int longest_path(const Tree& tree) {
    int depth = 0;
    for (NodeId m : tree.members) {
        depth = std::max(depth, chain_length_to_root(m, tree.parent));
    }
    return depth;
}

}  // namespace

PairMatrices oracle_pair_matrices(const NodeSet& nodes, const PruneConfig& config) {
    const int k = nodes.size();
    PairMatrices m;
    m.a = MatrixF(k);
    m.d = MatrixF(k);
    m.c = MatrixU8(k);
    m.p = MatrixF(k);

    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            m.a.at(i, j) = dot_clamped(nodes.unit(i), nodes.unit(j), nodes.dim);
            m.d.at(i, j) = distance(nodes.nodes[i], nodes.nodes[j]);
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const bool gate = static_cast<double>(m.a.at(i, j)) >= config.tau_s &&
                              static_cast<double>(m.d.at(i, j)) <= config.tau_p &&
                              frame_at(nodes, i) < frame_at(nodes, j);
            m.c.at(i, j) = gate ? 1 : 0;
        }
    }
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (!m.c.at(i, j)) continue;
            double score = static_cast<double>(m.a.at(i, j)) -
                           config.lambda * static_cast<double>(m.d.at(i, j));
            if (score <= 0.0) score = 1e-9;
            m.p.at(i, j) = static_cast<float>(score);
        }
    }
    return m;
}

Forest oracle_forest(const NodeSet& nodes, const PruneConfig& config, std::int64_t budget) {
    const int k = nodes.size();
    const PairMatrices m = oracle_pair_matrices(nodes, config);

    std::vector<int> in_deg(k, 0);
    std::vector<int> out_deg(k, 0);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (m.c.at(i, j)) {
                ++out_deg[i];
                ++in_deg[j];
            }
        }
    }

    std::vector<int> roots;
    Forest forest;
    for (int j = 0; j < k; ++j) {
        if (in_deg[j] == 0 && out_deg[j] > 0) roots.push_back(j);
        if (in_deg[j] == 0 && out_deg[j] == 0) forest.orphans.push_back(id_at(nodes, j));
    }

    // Exhaustive best incoming connection per node.
    std::vector<int> best(k, -1);
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
            if (!m.c.at(i, j)) continue;
            if (best[j] < 0 ||
                parent_wins(m.p.at(i, j), frame_at(nodes, i), id_at(nodes, i),
                            m.p.at(best[j], j), frame_at(nodes, best[j]), id_at(nodes, best[j]))) {
                best[j] = i;
            }
        }
    }

    // Tree membership: walk best-parent links up to a zero-in-degree node.
    std::vector<int> owner(k, -1);
    for (int j = 0; j < k; ++j) {
        if (best[j] < 0) continue;
        int cur = j;
        while (best[cur] >= 0) cur = best[cur];
        owner[j] = cur;
    }

    for (int r : roots) {
        std::vector<int> member_pos;
        member_pos.push_back(r);
        for (int j = 0; j < k; ++j) {
            if (owner[j] == r) member_pos.push_back(j);
        }
        std::sort(member_pos.begin(), member_pos.end(), [&](int x, int y) {
            if (frame_at(nodes, x) != frame_at(nodes, y))
                return frame_at(nodes, x) < frame_at(nodes, y);
            return id_at(nodes, x) < id_at(nodes, y);
        });

        Tree tree;
        tree.root = id_at(nodes, r);
        std::vector<int> attached;
        attached.push_back(r);
        for (int pos : member_pos) {
            if (pos == r) continue;
            int chosen = -1;
            for (int cand : attached) {
                if (frame_at(nodes, cand) >= frame_at(nodes, pos)) continue;
                if (!m.c.at(cand, pos)) continue;
                if (chosen < 0 ||
                    parent_wins(m.p.at(cand, pos), frame_at(nodes, cand), id_at(nodes, cand),
                                m.p.at(chosen, pos), frame_at(nodes, chosen),
                                id_at(nodes, chosen))) {
                    chosen = cand;
                }
            }
            if (chosen < 0) {
                forest.orphans.push_back(id_at(nodes, pos));
                continue;
            }
            tree.parent[id_at(nodes, pos)] = id_at(nodes, chosen);
            attached.push_back(pos);
        }
        for (int pos : attached) tree.members.push_back(id_at(nodes, pos));
        std::sort(tree.members.begin(), tree.members.end());
        tree.depth = longest_path(tree);
        forest.trees.push_back(std::move(tree));
    }

    std::sort(forest.trees.begin(), forest.trees.end(),
              [](const Tree& a, const Tree& b) { return a.root < b.root; });
    std::sort(forest.orphans.begin(), forest.orphans.end());

    // Greedy merge: full pair rescan every iteration.
    const double floor = config.tau_s / 2.0;
    while (static_cast<std::int64_t>(forest.trees.size()) > budget) {
        int bi = -1;
        int bj = -1;
        float best_sim = 0.0f;
        for (std::size_t i = 0; i < forest.trees.size(); ++i) {
            for (std::size_t j = i + 1; j < forest.trees.size(); ++j) {
                const int pa = nodes.index_of(forest.trees[i].root);
                const int pb = nodes.index_of(forest.trees[j].root);
                if (frame_at(nodes, pa) == frame_at(nodes, pb)) continue;
                const float sim = m.a.at(pa, pb);
                if (static_cast<double>(sim) < floor) continue;
                if (bi < 0 || sim > best_sim) {
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                    best_sim = sim;
                }
                // equal similarity: trees are sorted by root id, so the first
                // (i, j) found already has the smallest id pair
            }
        }
        if (bi < 0) {
            forest.merge_floor_hit = true;
            break;
        }

        Tree& ta = forest.trees[bi];
        Tree& tb = forest.trees[bj];
        const bool a_is_parent =
            frame_at(nodes, nodes.index_of(ta.root)) < frame_at(nodes, nodes.index_of(tb.root));
        Tree& parent_tree = a_is_parent ? ta : tb;
        Tree& child_tree = a_is_parent ? tb : ta;

        for (const auto& [c, p] : child_tree.parent) parent_tree.parent[c] = p;
        parent_tree.parent[child_tree.root] = parent_tree.root;
        for (NodeId mid : child_tree.members) parent_tree.members.push_back(mid);
        std::sort(parent_tree.members.begin(), parent_tree.members.end());
        parent_tree.depth = longest_path(parent_tree);

        forest.trees.erase(forest.trees.begin() + (a_is_parent ? bj : bi));
        std::sort(forest.trees.begin(), forest.trees.end(),
                  [](const Tree& a, const Tree& b) { return a.root < b.root; });
    }
    return forest;
}

namespace {

struct ScanTree {
    NodeId root;
    std::vector<NodeId> alive;
    std::map<NodeId, NodeId> parent;
    int depth;
};

int oracle_frame(const NodeSet& nodes, NodeId id) {
    return nodes.nodes[nodes.index_of(id)].frame;
}

int scan_depth(const ScanTree& t) {
    int depth = 0;
    for (NodeId m : t.alive) {
        int n = 0;
        NodeId cur = m;
        while (t.parent.count(cur)) {
            cur = t.parent.at(cur);
            ++n;
        }
        depth = std::max(depth, n);
    }
    return depth;
}

bool has_child(const ScanTree& t, NodeId id) {
    for (const auto& [c, p] : t.parent) {
        if (p == id) return true;
    }
    return false;
}

void scan_remove(ScanTree& t, NodeId id) {
    // splice children, then drop the node
    for (auto& [c, p] : t.parent) {
        if (p == id) p = t.parent.at(id);
    }
    t.parent.erase(id);
    t.alive.erase(std::find(t.alive.begin(), t.alive.end(), id));
}

std::vector<int> scan_order(const std::vector<ScanTree>& trees) {
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(trees.size()); ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (trees[x].depth != trees[y].depth) return trees[x].depth > trees[y].depth;
        if (trees[x].alive.size() != trees[y].alive.size())
            return trees[x].alive.size() > trees[y].alive.size();
        return trees[x].root < trees[y].root;
    });
    return order;
}

}  // namespace

PruneResult oracle_prune(const Forest& forest, const NodeSet& nodes, std::int64_t budget) {
    std::vector<NodeId> everything(forest.orphans);
    for (const Tree& t : forest.trees) {
        everything.insert(everything.end(), t.members.begin(), t.members.end());
    }
    std::sort(everything.begin(), everything.end());

    std::vector<NodeId> retained = everything;
    bool unreachable = budget > static_cast<std::int64_t>(everything.size());

    if (!unreachable && budget < static_cast<std::int64_t>(everything.size())) {
        std::int64_t remaining = static_cast<std::int64_t>(everything.size()) - budget;

        std::vector<NodeId> orphans = forest.orphans;
        std::vector<ScanTree> trees;
        for (const Tree& t : forest.trees) {
            trees.push_back({t.root,
                             std::vector<NodeId>(t.members.begin(), t.members.end()),
                             t.parent, t.depth});
        }
        std::vector<NodeId> removed;

        // orphans, latest frame then largest id, one scan per removal
        while (remaining > 0 && !orphans.empty()) {
            int pick = 0;
            for (int i = 1; i < static_cast<int>(orphans.size()); ++i) {
                const int fa = oracle_frame(nodes, orphans[i]);
                const int fb = oracle_frame(nodes, orphans[pick]);
                if (fa > fb || (fa == fb && orphans[i] > orphans[pick])) pick = i;
            }
            removed.push_back(orphans[pick]);
            orphans.erase(orphans.begin() + pick);
            --remaining;
        }

        // leaf phase with roles fixed at entry
        std::vector<NodeId> leaf_role;
        for (const ScanTree& t : trees) {
            for (NodeId m : t.alive) {
                if (m != t.root && !has_child(t, m)) leaf_role.push_back(m);
            }
        }
        const auto is_leaf_role = [&leaf_role](NodeId id) {
            return std::find(leaf_role.begin(), leaf_role.end(), id) != leaf_role.end();
        };

        bool swept = true;
        while (remaining > 0 && swept) {
            swept = false;
            for (int ti : scan_order(trees)) {
                ScanTree& t = trees[ti];
                std::vector<NodeId> leaves;
                for (NodeId m : t.alive) {
                    if (is_leaf_role(m)) leaves.push_back(m);
                }
                std::sort(leaves.begin(), leaves.end(), [&](NodeId a, NodeId b) {
                    const int fa = oracle_frame(nodes, a);
                    const int fb = oracle_frame(nodes, b);
                    if (fa != fb) return fa > fb;
                    return a > b;
                });
                for (NodeId leaf : leaves) {
                    if (remaining == 0) break;
                    scan_remove(t, leaf);
                    removed.push_back(leaf);
                    --remaining;
                    swept = true;
                }
                t.depth = scan_depth(t);
                if (remaining == 0) break;
            }
        }

        // tail phase, one max-frame group per tree per round
        bool progressed = true;
        while (remaining > 0 && progressed) {
            progressed = false;
            for (int ti : scan_order(trees)) {
                ScanTree& t = trees[ti];
                if (t.alive.size() <= 1) continue;
                int max_frame = -1;
                for (NodeId m : t.alive) max_frame = std::max(max_frame, oracle_frame(nodes, m));
                std::vector<NodeId> group;
                for (NodeId m : t.alive) {
                    if (oracle_frame(nodes, m) == max_frame) group.push_back(m);
                }
                std::sort(group.rbegin(), group.rend());
                for (NodeId g : group) {
                    if (remaining == 0) break;
                    scan_remove(t, g);
                    removed.push_back(g);
                    --remaining;
                    progressed = true;
                }
                t.depth = scan_depth(t);
                if (remaining == 0) break;
            }
        }

        // root fallback: keep the earliest-frame roots
        while (remaining > 0) {
            int pick = -1;
            for (int i = 0; i < static_cast<int>(trees.size()); ++i) {
                if (trees[i].alive.empty()) continue;
                if (pick < 0) {
                    pick = i;
                    continue;
                }
                const int fa = oracle_frame(nodes, trees[i].root);
                const int fb = oracle_frame(nodes, trees[pick].root);
                if (fa > fb || (fa == fb && trees[i].root > trees[pick].root)) pick = i;
            }
            removed.push_back(trees[pick].root);
            trees[pick].alive.clear();
            --remaining;
        }

        retained.clear();
        for (NodeId id : everything) {
            if (std::find(removed.begin(), removed.end(), id) == removed.end()) {
                retained.push_back(id);
            }
        }
    }

    PruneResult result;
    result.retained = retained;
    result.frames = nodes.frames;
    result.tokens_per_frame = nodes.tokens_per_frame;
    result.per_frame_counts.assign(nodes.frames, 0);
    for (NodeId id : result.retained) {
        result.per_frame_counts[id / nodes.tokens_per_frame] += 1;
    }
    result.achieved_budget = static_cast<double>(result.retained.size()) /
                             (static_cast<double>(nodes.frames) * nodes.tokens_per_frame);
    result.budget_unreachable = unreachable;
    return result;
}

}  // namespace tokenforest::oracle

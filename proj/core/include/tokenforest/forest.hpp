#pragma once

#include <cstdint>
#include <vector>

#include "tokenforest/types.hpp"

namespace tokenforest {

/// Dense k x k matrix over node positions (the order of NodeSet::nodes).
struct MatrixF {
    int k = 0;
    std::vector<float> v;

    MatrixF() = default;
    explicit MatrixF(int n) : k(n), v(static_cast<std::size_t>(n) * n, 0.0f) {}

    float at(int i, int j) const { return v[static_cast<std::size_t>(i) * k + j]; }
    float& at(int i, int j) { return v[static_cast<std::size_t>(i) * k + j]; }
};

struct MatrixU8 {
    int k = 0;
    std::vector<std::uint8_t> v;

    MatrixU8() = default;
    explicit MatrixU8(int n) : k(n), v(static_cast<std::size_t>(n) * n, 0) {}

    std::uint8_t at(int i, int j) const { return v[static_cast<std::size_t>(i) * k + j]; }
    std::uint8_t& at(int i, int j) { return v[static_cast<std::size_t>(i) * k + j]; }
};

/// The four pairwise matrices driving forest construction:
///   a — cosine similarity of unit embeddings, symmetric, clamped to [-1, 1];
///   d — Euclidean distance of normalized coordinates, symmetric;
///   c — binary connection mask, c(i,j)=1 iff a >= tau_s, d <= tau_p and
///       frame(i) < frame(j), hence a DAG adjacency;
///   p — connection-masked ranking score c * (a - lambda*d); scores of
///       connected pairs are clamped up to a tiny positive epsilon so
///       p(i,j) > 0 exactly where c(i,j) = 1.
struct PairMatrices {
    MatrixF a;
    MatrixF d;
    MatrixU8 c;
    MatrixF p;
};

/// Root detection result: roots have zero in-degree and positive out-degree
/// in C; isolated nodes have both degrees zero. Positions, ascending.
struct RootScan {
    std::vector<int> roots;
    std::vector<int> isolated;
};

/// Tree membership derived from best incoming connections.
struct Assignment {
    // best_parent[j] = position of argmax_i p(i,j), tie-broken to the latest
    // earlier frame then the smallest node id; -1 when j has no incoming
    // connection.
    std::vector<int> best_parent;
    // root_of[j] = position of the root reached by following best parents
    // upward; -1 for roots themselves and for isolated nodes.
    std::vector<int> root_of;
};

/// Edge construction for one tree.
struct LinkResult {
    std::map<NodeId, NodeId> parent;  // child -> parent over kept members
    int depth = 0;
    std::vector<NodeId> demoted;      // members that could not attach
};

MatrixF cosine_adjacency(const NodeSet& nodes);
MatrixF spatial_distance(const NodeSet& nodes);
MatrixU8 connection_matrix(const MatrixF& a, const MatrixF& d, const NodeSet& nodes,
                           double tau_s, double tau_p);
RootScan find_roots(const MatrixU8& c);
MatrixF rank_matrix(const MatrixU8& c, const MatrixF& a, const MatrixF& d, double lambda);
Assignment assign_children(const MatrixF& p, const NodeSet& nodes, const RootScan& roots);

/// Links the members of one tree: walking frames in ascending order, every
/// non-root member picks the connected earlier member with the highest
/// ranking score (ties: latest frame, then smallest node id). Members with
/// no reachable parent are demoted. Depth is the longest root-to-leaf path.
LinkResult link_nodes(int root_pos, const std::vector<int>& member_pos, const NodeSet& nodes,
                      const MatrixU8& c, const MatrixF& p);

/// Greedily merges trees while more than `budget` remain: the eligible root
/// pair with the highest cosine similarity merges first (ties to the
/// smaller id pair), the later-frame root becoming a child of the earlier
/// one. Same-frame root pairs are ineligible (edges must advance in time),
/// and pairs below tau_s/2 never merge; stopping early for either reason
/// sets merge_floor_hit.
Forest merge_trees(const Forest& forest, std::int64_t budget, const MatrixF& a,
                   const NodeSet& nodes, double tau_s);

/// Runs root detection, child assignment and linking over precomputed
/// matrices. No merging.
Forest build_forest(const NodeSet& nodes, const PruneConfig& config,
                    const PairMatrices& mats);

/// Convenience: matrix construction plus the overload above.
Forest build_forest(const NodeSet& nodes, const PruneConfig& config);

/// build_forest followed by merge_trees down to `budget` trees.
Forest build_forest(const NodeSet& nodes, const PruneConfig& config, std::int64_t budget);

PairMatrices compute_pair_matrices(const NodeSet& nodes, const PruneConfig& config);

/// Longest root-to-leaf path of the tree described by `parent`, in edges.
int tree_depth(NodeId root, const std::vector<NodeId>& members,
               const std::map<NodeId, NodeId>& parent);

}  // namespace tokenforest

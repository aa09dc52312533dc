#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tokenforest {

using NodeId = std::int64_t;

/// Error raised by malformed inputs (files, embeddings, scene specs).
/// Carries a machine-checkable kind so callers can map failures to
/// distinct exit codes or messages.
class DataError : public std::runtime_error {
public:
    enum class Kind {
        BadMagic,
        BadVersion,
        TruncatedPayload,
        SizeMismatch,
        InvalidHeader,
        InvalidValue,
        DimensionMismatch,
        DegenerateInput,
        Io,
    };

    DataError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// How candidate nodes are picked from each frame.
enum class SelectorKind {
    Random,
    NormSaliency,
    All,
};

SelectorKind selector_from_string(const std::string& name);
std::string selector_to_string(SelectorKind kind);

/// Per-frame token embeddings with their grid geometry. Immutable after
/// construction; validate() enforces finite values and grid_h*grid_w == N.
struct VideoTokens {
    int frames = 0;            // T
    int tokens_per_frame = 0;  // N
    int dim = 0;               // d
    int grid_h = 0;
    int grid_w = 0;
    std::vector<float> data;   // T*N*d values, frame-major, grid-major, dim-minor

    std::size_t total_tokens() const {
        return static_cast<std::size_t>(frames) * static_cast<std::size_t>(tokens_per_frame);
    }

    const float* token(int frame, int grid_index) const {
        return data.data() +
               (static_cast<std::size_t>(frame) * tokens_per_frame + grid_index) * dim;
    }

    void validate() const;
};

/// One candidate node: a token admitted to forest construction.
struct Node {
    NodeId id = 0;       // frame * tokens_per_frame + grid_index
    int frame = 0;
    int grid_index = 0;
    double x = 0.0;      // (row + 0.5) / grid_h
    double y = 0.0;      // (col + 0.5) / grid_w
};

/// Selected candidate nodes with their embeddings. Nodes are sorted by
/// (frame, grid_index), i.e. ascending id. unit_embeddings hold the
/// L2-normalized rows used for cosine similarity.
struct NodeSet {
    int frames = 0;
    int tokens_per_frame = 0;
    int dim = 0;
    std::vector<Node> nodes;
    std::vector<float> embeddings;       // |nodes| * dim, raw values
    std::vector<float> unit_embeddings;  // |nodes| * dim, unit L2 norm

    int size() const { return static_cast<int>(nodes.size()); }

    const float* unit(int index) const {
        return unit_embeddings.data() + static_cast<std::size_t>(index) * dim;
    }

    const float* raw(int index) const {
        return embeddings.data() + static_cast<std::size_t>(index) * dim;
    }

    /// Position of a node id inside `nodes`, or -1 when absent.
    int index_of(NodeId id) const;
};

/// One rooted tree of the forest. `parent` maps child id -> parent id and
/// has no entry for the root. `members` is sorted ascending and includes
/// the root. `depth` is the longest root-to-leaf path, in edges.
struct Tree {
    NodeId root = 0;
    std::vector<NodeId> members;
    std::map<NodeId, NodeId> parent;
    int depth = 0;

    bool operator==(const Tree&) const = default;
};

/// Rooted trees plus the nodes that joined no tree. Trees are kept sorted
/// by root id; orphans sorted ascending. `merge_floor_hit` records that
/// tree merging stopped at the similarity floor with more trees than
/// requested.
struct Forest {
    std::vector<Tree> trees;
    std::vector<NodeId> orphans;
    bool merge_floor_hit = false;

    bool operator==(const Forest&) const = default;

    std::size_t node_count() const;
};

/// Pruning parameters. All ranges are enforced by validate().
struct PruneConfig {
    double tau_s = 0.9;               // semantic similarity threshold, [-1, 1]
    double tau_p = 0.8;               // spatial distance threshold, [0, sqrt(2)]
    double lambda = 0.5;              // semantic-vs-spatial trade-off weight, >= 0
    double keep_ratio = 0.5;          // per-frame candidate fraction, (0, 1]
    SelectorKind selector = SelectorKind::Random;
    double budget_ratio = 0.9;        // fraction of tokens to remove, [0, 1)
    std::uint64_t seed = 0;

    void validate() const;

    bool operator==(const PruneConfig&) const = default;
};

/// Retained token identities after pruning.
struct PruneResult {
    std::vector<NodeId> retained;      // ascending (frame, grid_index)
    std::vector<int> per_frame_counts; // length T, sums to |retained|
    double achieved_budget = 0.0;      // |retained| / (T*N)
    int frames = 0;
    int tokens_per_frame = 0;
    bool budget_unreachable = false;   // K exceeded the available node count

    bool operator==(const PruneResult&) const = default;
};

/// Retained token count for a compression ratio: K = max(1, round((1-r)*T*N)).
/// Rounding is half-up.
std::int64_t compute_budget(double budget_ratio, int frames, int tokens_per_frame);

/// Per-frame candidate count used by node selection: max(1, round(keep_ratio*N)),
/// half-up. The `all` selector keeps every token regardless.
int nodes_per_frame(double keep_ratio, int tokens_per_frame, SelectorKind selector);

namespace detail {

inline std::int64_t round_half_up(double x) {
    return static_cast<std::int64_t>(std::floor(x + 0.5));
}

/// splitmix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (std::uint64_t k : keys) {
        h = mix64(h ^ mix64(k));
    }
    return h;
}

/// Sequential double-precision dot product of two float rows, clamped to
/// [-1, 1]. Fixed evaluation order keeps results identical across builds
/// of the same arithmetic.
inline float unit_dot(const float* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    if (acc > 1.0) acc = 1.0;
    if (acc < -1.0) acc = -1.0;
    return static_cast<float>(acc);
}

inline float coord_distance(double x0, double y0, double x1, double y1) {
    const double dx = x0 - x1;
    const double dy = y0 - y1;
    return static_cast<float>(std::sqrt(dx * dx + dy * dy));
}

}  // namespace detail

}  // namespace tokenforest
